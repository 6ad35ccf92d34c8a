// Only success paths: building a JsError needs a JS host.

use fsg_demo::{poisson_blend, render_heatmap, MapDemo};

#[test]
fn map_query_weights() {
    let demo = MapDemo::new(&[-30.0, 0.0, 30.0, 0.0, 0.0, 30.0, 29.0, 1.0], 5.0).unwrap();
    assert_eq!(demo.kept(), vec![0, 1, 2]);
    assert_eq!(demo.vertices().len(), 2 * 7);
    assert_eq!(demo.triangles().len(), 3 * (2 * 3 + 2));
    let q = demo.query(30.0, 0.0).unwrap();
    let k = (0..3).find(|&k| q[k] == 1.0).unwrap();
    assert_eq!(q[3 + k], 1.0);
    let q = demo.query(0.0, 10.0).unwrap();
    assert!((q[3..].iter().sum::<f64>() - 1.0).abs() < 1e-12);
}

#[test]
fn blend_keeps_unmasked_pixels() {
    let (w, h) = (12, 10);
    let target: Vec<u8> = (0..w * h)
        .flat_map(|i| [(i % 200) as u8, 50, 90, 255])
        .collect();
    let source: Vec<u8> = (0..w * h)
        .flat_map(|i| [30, (i * 7 % 250) as u8, 200, 255])
        .collect();
    let mask: Vec<u8> = (0..w * h)
        .map(|i| u8::from((3..7).contains(&(i / w)) && (3..9).contains(&(i % w))))
        .collect();
    let out = poisson_blend(w, h, &target, &source, &mask).unwrap();
    assert_eq!(out.len(), w * h * 4);
    for i in 0..w * h {
        if mask[i] == 0 {
            assert_eq!(out[4 * i..4 * i + 4], target[4 * i..4 * i + 4]);
        }
    }
    assert_eq!(
        poisson_blend(w, h, &target, &source, &vec![0; w * h]).unwrap(),
        target
    );
}

#[test]
fn heatmap_peaks_at_landmarks() {
    let out = render_heatmap(16, 16, &[4.0, 4.0, 12.0, 5.0, 8.0, 12.0], 1.5).unwrap();
    assert_eq!(out.len(), 16 * 16 * 4);
    let at = |x: usize, y: usize| out[4 * (y * 16 + x)];
    assert_eq!(at(4, 4), 255);
    assert_eq!(at(8, 12), 255);
    assert!(at(0, 15) < 10);
}
