use crate::deconv::{compute_svd, tsvd_inverse, TsvdConfig};
use crate::error::{PlpError, Result};
use crate::model::{build_convolution_matrix, AifCurve};
use crate::weights::{deconvolution_weights, WeightVector};

#[derive(Debug, Clone, PartialEq)]
pub struct PanoramaEntry {
    pub rank: usize,
    pub volume: WeightVector,
    pub flow: WeightVector,
}

/// TSVD volume and flow weights at each explicit rank.
pub fn weight_panorama(aif: &AifCurve, ranks: &[usize]) -> Result<Vec<PanoramaEntry>> {
    let grid = aif.grid();
    let n = grid.len();
    if let Some(bad) = ranks.iter().find(|&&r| r == 0 || r > n) {
        return Err(PlpError::invalid(format!("rank {bad} outside 1..={n}")));
    }
    let matrix = build_convolution_matrix(aif, grid)?;
    let factors = compute_svd(matrix.entries())?;
    ranks
        .iter()
        .map(|&rank| {
            let inverse = tsvd_inverse(&factors, TsvdConfig::Rank(rank))?;
            let (volume, flow) = deconvolution_weights(&inverse, grid)?;
            Ok(PanoramaEntry { rank, volume, flow })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deconv::exact_inverse;
    use crate::model::{build_uniform_grid, gamma_aif, GammaAifParams};

    #[test]
    fn full_rank_equals_exact_inverse() {
        let g = build_uniform_grid(12, 1.0).unwrap();
        let aif = gamma_aif(GammaAifParams::new(0.0, 0.3).unwrap(), &g).unwrap();
        let pano = weight_panorama(&aif, &[12]).unwrap();
        let exact = exact_inverse(build_convolution_matrix(&aif, &g).unwrap().entries()).unwrap();
        let (v, f) = deconvolution_weights(&exact, &g).unwrap();
        for (a, b) in pano[0].volume.weights().iter().zip(v.weights()) {
            assert!((a - b).abs() <= 1e-8 * b.abs().max(1.0));
        }
        for (a, b) in pano[0].flow.weights().iter().zip(f.weights()) {
            assert!((a - b).abs() <= 1e-8 * b.abs().max(1.0));
        }
    }

    #[test]
    fn rank_one_closed_form() {
        let g = build_uniform_grid(60, 1.0).unwrap();
        let aif = gamma_aif(GammaAifParams::new(3.0, 1.0 / 1.5).unwrap(), &g).unwrap();
        let pano = weight_panorama(&aif, &[1]).unwrap();
        let f = compute_svd(build_convolution_matrix(&aif, &g).unwrap().entries()).unwrap();
        // column sums of v_1 u_1ᵀ / λ_1 = (Σ v_1) u_1 / λ_1
        let v_sum: f64 = f.v.row(0).iter().sum();
        for (i, w) in pano[0].volume.weights().iter().enumerate() {
            let expected = v_sum * f.u[(i, 0)] / f.singular_values[0];
            assert!((w - expected).abs() <= 1e-12 * expected.abs().max(1e-12));
        }
    }

    #[test]
    fn rejects_out_of_range_rank() {
        let g = build_uniform_grid(5, 1.0).unwrap();
        let aif = gamma_aif(GammaAifParams::new(0.0, 0.3).unwrap(), &g).unwrap();
        assert!(weight_panorama(&aif, &[0]).is_err());
        assert!(weight_panorama(&aif, &[6]).is_err());
    }
}
