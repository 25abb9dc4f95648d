//! Splits a phantom into its measurable and null-space parts under a
//! factor-3 Cartesian mask.

use nullmap::linop::{compute_svd, MaskSpec, Operator, DEFAULT_EPSILON};
use nullmap::simulate::shepp_logan;
use nullmap::subspace::decompose;

fn main() -> nullmap::Result<()> {
    let theta = shepp_logan(64, 64);
    for factor in [1, 2, 3, 4] {
        let op = Operator::fft_mask(MaskSpec::uniform(64, 64, factor, 0)?);
        let dec = compute_svd(&op, DEFAULT_EPSILON)?;
        let (meas, null) = decompose(&dec, &theta)?;
        println!(
            "factor {factor}: rank {:>4}, ||meas|| {:.3}, ||null|| {:.3}, |<meas,null>| {:.1e}, ||H null|| {:.1e}",
            dec.rank(),
            meas.norm(),
            null.norm(),
            meas.dot(&null).norm(),
            nullmap::linop::vec_norm(&op.apply(&null)?)
        );
    }
    Ok(())
}
