use crate::error::{Error, Result};

/// `E[Z^k]` for `Z ~ N(0,1)`: zero for odd `k`, `(k-1)!!` for even `k`.
pub fn standard_normal_moment(k: u32) -> Result<f64> {
    if k > 8 {
        return Err(Error::UnsupportedOrder(k));
    }
    if k % 2 == 1 {
        return Ok(0.0);
    }
    Ok((1..k).step_by(2).map(f64::from).product())
}
