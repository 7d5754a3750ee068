use horizon_web::{cleanup, convcalc, Detectors, Scene};

#[test]
fn scene_exposes_pixels_and_truth() {
    let scene = Scene::new(7, 3, 0.05, 0.6).unwrap();
    let (w, h) = (scene.width() as usize, scene.height() as usize);
    assert_eq!((w, h), (256, 192));
    assert_eq!(scene.rgba().len(), w * h * 4);
    assert_eq!(scene.truth().len(), w);
    assert!(Scene::new(7, 0, -1.0, 0.6).is_err());
}

#[test]
fn both_extractors_find_the_horizon() {
    let detectors = Detectors::new(11, 4, 150).unwrap();
    let scene = Scene::new(7, 0, 0.05, 0.6).unwrap();
    for (variant, mu) in [("dcsi", 0.0), ("energy", 200.0)] {
        let e = detectors.extract(&scene, variant, 40, 0.05, mu).unwrap();
        assert_eq!(e.skyline().len(), 256);
        assert_eq!(e.scores_rgba().len(), 256 * 192 * 4);
        assert!(e.accuracy() > 0.95, "{variant}: {}", e.accuracy());
        assert!(e.distance() < 5.0, "{variant}: {}", e.distance());
    }
    assert!(detectors.extract(&scene, "sobel", 40, 0.05, 0.0).is_err());
    assert!(detectors.extract(&scene, "dcsi", 0, 0.05, 0.0).is_err());
}

#[test]
fn cleanup_reports_accuracy_before_and_after() {
    let scene = Scene::new(7, 1, 0.05, 0.6).unwrap();
    let pp2 = cleanup(&scene, 3, 3, 5, "pp2", 4).unwrap();
    assert!(pp2.accuracy_after() >= pp2.accuracy_before());
    assert_eq!(pp2.cleaned_rgba().len(), 256 * 192 * 4);
    let none = cleanup(&scene, 3, 3, 5, "none", 4).unwrap();
    assert_eq!(none.accuracy_after(), none.accuracy_before());
    assert_eq!(none.corrupted_rgba(), none.cleaned_rgba());
    assert!(cleanup(&scene, 3, 3, 5, "pp2", 6).is_err());
    assert!(cleanup(&scene, 3, 3, 5, "blur", 4).is_err());
}

#[test]
fn convcalc_matches_layer_arithmetic() {
    assert_eq!(convcalc(224, 3, 1, 1, false), Ok(224));
    assert_eq!(convcalc(224, 2, 0, 2, false), Ok(112));
    assert_eq!(convcalc(112, 2, 0, 2, true), Ok(224));
    assert!(convcalc(224, 3, 0, 2, false).is_err());
}
