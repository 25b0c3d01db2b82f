use ndarray::ShapeBuilder;
use ndarray::array;
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64;

#[test]
fn survey() {
    let c = |re, im| Complex64::new(re, im);
    // H = [[0, i], [-i, 0]]: eigvec for +1 is (1, -i)/sqrt2
    let h = array![[c(0.0, 0.0), c(0.0, 1.0)], [c(0.0, -1.0), c(0.0, 0.0)]];
    for uplo in [UPLO::Lower, UPLO::Upper] {
        let (vals, vecs) = h.eigh(uplo).unwrap();
        println!("uplo {uplo:?}: vals {:?}", vals);
        for k in 0..2 {
            let v = vecs.column(k).to_owned();
            let hv = h.dot(&v);
            let resid = (&hv - &v.mapv(|z| z * vals[k])).iter().map(|z| z.norm()).sum::<f64>();
            println!("  col {k}: residual |Hv - lambda v| = {resid:.2e}, v = [{:.3}, {:.3}]", v[0], v[1]);
        }
        for k in 0..2 {
            let v = vecs.row(k).to_owned();
            let hv = h.dot(&v);
            let resid = (&hv - &v.mapv(|z| z * vals[k])).iter().map(|z| z.norm()).sum::<f64>();
            println!("  row {k}: residual = {resid:.2e}");
        }
    }
    // row-major vs column-major (f-order) input
    let hf = ndarray::Array2::from_shape_fn((2,2).f(), |(i,j)| h[(i,j)]);
    let (_, vecs) = hf.eigh(UPLO::Lower).unwrap();
    for k in 0..2 {
        let v = vecs.column(k).to_owned();
        let hv = h.dot(&v);
        let lam = if k == 0 { -1.0 } else { 1.0 };
        let resid = (&hv - &v.mapv(|z| z * lam)).iter().map(|z| z.norm()).sum::<f64>();
        println!("f-order col {k}: residual = {resid:.2e}");
    }
}
