//! How epsilon picks the truncation index for an ill-conditioned diagonal
//! operator, and the noise amplification bound that follows.

use nullmap::linop::{compute_svd, DenseOperator, Operator};
use nullmap::subspace::{truncated_pinv, verify_stability};
use num_complex::Complex64;

fn main() -> nullmap::Result<()> {
    let sv: Vec<f64> = (0..8).map(|k| 10f64.powi(-k)).collect();
    let op = Operator::Dense(DenseOperator::diagonal(&sv)?);
    let g: Vec<Complex64> = sv.iter().map(|&s| Complex64::new(s, 0.0)).collect();
    let mut g2 = g.clone();
    g2[7] += 1e-6;

    println!("singular values: {sv:?}");
    for eps in [1e2, 1e4, 1e6, 1e8] {
        let dec = compute_svd(&op, eps)?;
        let x = truncated_pinv(&dec, &g)?;
        let st = verify_stability(&dec, &g, &g2)?;
        println!(
            "eps {eps:>6.0e}: P = {}, recovered {:.0}/8 ones, ||dx|| = {:.2e} <= {:.2e}",
            dec.truncation(),
            x.data().iter().map(|z| z.re).sum::<f64>(),
            st.lhs,
            st.alpha * st.rhs
        );
    }
    Ok(())
}
