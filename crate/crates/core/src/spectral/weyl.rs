use serde::{Deserialize, Serialize};

/// Counting constant for `j* = ceil(C_Weyl |cube|)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeylParams {
    pub c_weyl: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeylCount {
    pub exact: usize,
    pub asymptotic: f64,
    pub j_star: usize,
}

/// `#{lambda_j <= E}` over a sorted spectrum.
pub fn count_below(values: &[f64], e: f64) -> usize {
    values.partition_point(|&v| v <= e)
}

/// Volume of the unit ball of `R^k`.
fn unit_ball_volume(k: u32) -> f64 {
    match k {
        0 => 1.0,
        1 => 2.0,
        _ => unit_ball_volume(k - 2) * 2.0 * std::f64::consts::PI / k as f64,
    }
}

/// Continuum Weyl law `omega_k |Q| E^{k/2} / (2 pi)^k` for a box of volume
/// `volume` in `R^k`.
pub fn weyl_asymptotic(volume: f64, k: u32, e: f64) -> f64 {
    if e <= 0.0 {
        return 0.0;
    }
    unit_ball_volume(k) * volume * e.powf(k as f64 / 2.0) / (2.0 * std::f64::consts::PI).powi(k as i32)
}

/// Exact count for `-d^2/dx^2` on `(0, length)` with Dirichlet conditions,
/// whose eigenvalues are `(j pi / length)^2`.
pub fn continuum_interval_count(length: f64, e: f64) -> usize {
    let mut j = 0usize;
    while ((j + 1) as f64 * std::f64::consts::PI / length).powi(2) <= e * (1.0 + 1e-15) {
        j += 1;
    }
    j
}

/// Exact and asymptotic counts for a spectrum on a box of side `side` in
/// `R^k`.
pub fn weyl_count(values: &[f64], side: f64, k: u32, e: f64, params: WeylParams) -> WeylCount {
    let volume = side.powi(k as i32);
    WeylCount {
        exact: count_below(values, e),
        asymptotic: weyl_asymptotic(volume, k, e),
        j_star: (params.c_weyl * volume).ceil() as usize,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_of_length_pi() {
        assert_eq!(continuum_interval_count(std::f64::consts::PI, 100.0), 10);
        assert_eq!(continuum_interval_count(std::f64::consts::PI, 99.0), 9);
        assert!((weyl_asymptotic(std::f64::consts::PI, 1, 100.0) - 10.0).abs() < 1e-12);
    }

    #[test]
    fn counts_are_monotone_and_bounded() {
        let values = [0.5, 1.0, 1.0, 3.0];
        let p = WeylParams { c_weyl: 0.5 };
        let mut last = 0;
        for e in [0.0, 0.5, 1.0, 2.0, 10.0, 1e9] {
            let c = weyl_count(&values, 4.0, 1, e, p);
            assert!(c.exact >= last && c.exact <= values.len());
            last = c.exact;
        }
        assert_eq!(last, 4);
        assert_eq!(weyl_count(&values, 4.0, 1, 1.0, p).j_star, 2);
    }

    #[test]
    fn ball_volumes() {
        assert!((unit_ball_volume(2) - std::f64::consts::PI).abs() < 1e-15);
        assert!((unit_ball_volume(3) - 4.0 * std::f64::consts::PI / 3.0).abs() < 1e-14);
    }
}
