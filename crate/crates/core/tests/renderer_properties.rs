use vft_core::gripper::GripperModel;
use vft_core::renderer::{render, CameraModel, EnvironmentSpec};
use vft_core::{Rng, Wrench};

#[test]
fn mirrored_configuration_renders_as_flipped_image() {
    let cam = CameraModel::default();
    let env = EnvironmentSpec::uniform("flat", [0.55, 0.6, 0.5]);
    let mut rng = Rng::new(11);
    for i in 0..25 {
        let aperture = rng.uniform(0.0, 1.0);
        let model = GripperModel::tendon_actuated().with_aperture(aperture);
        let w = Wrench::from_array([
            rng.uniform(-4.0, 4.0),
            rng.uniform(-4.0, 4.0),
            rng.uniform(-4.0, 4.0),
            rng.uniform(-0.3, 0.3),
            rng.uniform(-0.3, 0.3),
            rng.uniform(-0.3, 0.3),
        ]);
        let cfg = model.deform(&w);
        let a = render(&cfg, &cam, &env, &mut Rng::new(i));
        let b = render(&cfg.mirrored_x(), &cam, &env, &mut Rng::new(i));
        assert_eq!(a.flipped_horizontal(), b, "sample {i}");
        // the mirrored configuration is what the simulator itself produces
        let c = render(&model.deform(&w.mirrored_x()), &cam, &env, &mut Rng::new(i));
        let diff = b.mean_abs_diff(&c);
        assert!(diff < 1e-6, "sample {i}: {diff}");
    }
}

#[test]
fn lateral_force_is_more_visible_than_depth_force() {
    let cam = CameraModel::default();
    let env = EnvironmentSpec::uniform("flat", [0.6, 0.6, 0.6]);
    let model = GripperModel::tendon_actuated();
    let rest = render(&model.rest_configuration(), &cam, &env, &mut Rng::new(0));
    for magnitude in [1.0, 3.0, 5.0] {
        let fx = render(
            &model.deform(&Wrench::from_array([magnitude, 0.0, 0.0, 0.0, 0.0, 0.0])),
            &cam,
            &env,
            &mut Rng::new(0),
        );
        let fz = render(
            &model.deform(&Wrench::from_array([0.0, 0.0, magnitude, 0.0, 0.0, 0.0])),
            &cam,
            &env,
            &mut Rng::new(0),
        );
        let dx = rest.mean_abs_diff(&fx);
        let dz = rest.mean_abs_diff(&fz);
        assert!(dz > 0.0, "depth force must leave a trace");
        assert!(dx > dz, "magnitude {magnitude}: x {dx} vs z {dz}");
    }
}
