//! Digital SVD reference and analog beamsteering.
//!
//! The analog beamsteerers point one steering vector at each path: with exact
//! steering frequencies `F_A = A_bs` and `W_A = A_ue^H`; with finite codebooks
//! every path's `psi` is first snapped to the nearest codebook entry.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::array_channel::{response_matrix, ArrayGeometry, PathParams};
use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;

/// Top-`L` singular triplets of a channel.
#[derive(Debug, Clone, PartialEq)]
pub struct SvdReference {
    /// `N_ue x L` left singular vectors.
    pub u_l: ComplexMatrix,
    /// Nonincreasing singular values.
    pub sigma_l: Vec<f64>,
    /// `N_bs x L` right singular vectors.
    pub v_l: ComplexMatrix,
}

/// Top-`l` SVD of `h`. Each singular-vector pair is rotated so the
/// largest-magnitude entry of the left vector is real and nonnegative.
pub fn svd_reference(h: &ComplexMatrix, l: usize) -> Result<SvdReference> {
    let (m, n) = h.shape();
    let k = m.min(n);
    if l == 0 || l > k {
        return Err(Error::Dimension(format!(
            "requested {l} singular triplets of a {m}x{n} matrix"
        )));
    }
    let svd = h.clone().svd(true, true);
    let u = svd.u.expect("left singular vectors requested");
    let v_t = svd.v_t.expect("right singular vectors requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    order.truncate(l);

    let mut u_l = ComplexMatrix::zeros(m, l);
    let mut v_l = ComplexMatrix::zeros(n, l);
    let mut sigma_l = Vec::with_capacity(l);
    for (dst, &src) in order.iter().enumerate() {
        let col = u.column(src);
        let pivot = col
            .iter()
            .enumerate()
            .fold((0, 0.0), |best, (i, z)| if z.norm() > best.1 { (i, z.norm()) } else { best })
            .0;
        let rot = Complex64::from_polar(1.0, -col[pivot].arg());
        for r in 0..m {
            u_l[(r, dst)] = u[(r, src)] * rot;
        }
        for r in 0..n {
            v_l[(r, dst)] = v_t[(src, r)].conj() * rot;
        }
        sigma_l.push(svd.singular_values[src]);
    }
    Ok(SvdReference { u_l, sigma_l, v_l })
}

/// Uniformly spaced steering frequencies implementable with phase shifters.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    pub size: usize,
    pub d_over_lambda: f64,
    /// Entry `n` is `(4*n*pi/C - 2*pi) * d/lambda`.
    pub entries_psi: Vec<f64>,
}

impl Codebook {
    pub fn spacing(&self) -> f64 {
        4.0 * PI * self.d_over_lambda / self.size as f64
    }

    fn lower_edge(&self) -> f64 {
        -2.0 * PI * self.d_over_lambda
    }

    /// `N / C` for an array of `n_elements`.
    pub fn gamma(&self, n_elements: usize) -> f64 {
        n_elements as f64 / self.size as f64
    }
}

pub fn build_codebook(c: usize, d_over_lambda: f64) -> Result<Codebook> {
    if c == 0 {
        return Err(Error::config("codebook size must be at least 1"));
    }
    if !(d_over_lambda > 0.0 && d_over_lambda.is_finite()) {
        return Err(Error::config(format!(
            "d/lambda must be positive, got {d_over_lambda}"
        )));
    }
    let entries_psi = (0..c)
        .map(|n| (4.0 * n as f64 * PI / c as f64 - 2.0 * PI) * d_over_lambda)
        .collect();
    Ok(Codebook {
        size: c,
        d_over_lambda,
        entries_psi,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quantized {
    pub psi_hat: f64,
    pub index: usize,
    /// Input lay outside `[-2*pi*d/lambda, 2*pi*d/lambda]` and was clamped.
    pub clamped: bool,
}

/// Nearest codebook entry to `psi`; ties go to the lower index.
pub fn quantize_psi(psi: f64, cb: &Codebook) -> Quantized {
    let limit = 2.0 * PI * cb.d_over_lambda;
    let clamped = !(psi.abs() <= limit);
    let target = if psi.is_nan() { 0.0 } else { psi.clamp(-limit, limit) };

    let last = cb.size - 1;
    let approx = ((target - cb.lower_edge()) / cb.spacing()).floor();
    let base = if approx <= 0.0 { 0 } else { (approx as usize).min(last) };
    let lo = base.saturating_sub(1);
    let hi = (base + 1).min(last);
    let mut index = lo;
    for i in lo..=hi {
        if (target - cb.entries_psi[i]).abs() < (target - cb.entries_psi[index]).abs() {
            index = i;
        }
    }
    Quantized {
        psi_hat: cb.entries_psi[index],
        index,
        clamped,
    }
}

/// How to treat two paths that snap to the same codebook entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CollisionPolicy {
    /// Keep the shared entry; the beamformer may lose rank.
    #[default]
    Allow,
    /// Give later paths the nearest entry not yet taken.
    DistinctEntries,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantizationReport {
    /// Chosen codebook indices; empty for a side that steers exactly.
    pub index_bs: Vec<usize>,
    pub index_ue: Vec<usize>,
    /// `psi - psi_hat` per path at the base station.
    pub psi_err_bs: Vec<f64>,
    pub psi_err_ue: Vec<f64>,
    pub collision_bs: bool,
    pub collision_ue: bool,
    pub clamped: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalogBeamformers {
    /// `N_bs x L` transmit beamformer.
    pub f_a: ComplexMatrix,
    /// `L x N_ue` receive beamformer.
    pub w_a: ComplexMatrix,
    pub chosen_psi_bs: Vec<f64>,
    pub chosen_psi_ue: Vec<f64>,
    /// Present for codebook-quantized beamformers.
    pub quantization: Option<QuantizationReport>,
}

fn build_beamformers(
    bs: &ArrayGeometry,
    ue: &ArrayGeometry,
    psi_bs: Vec<f64>,
    psi_ue: Vec<f64>,
    quantization: Option<QuantizationReport>,
) -> AnalogBeamformers {
    AnalogBeamformers {
        f_a: response_matrix(bs, &psi_bs),
        w_a: response_matrix(ue, &psi_ue).adjoint(),
        chosen_psi_bs: psi_bs,
        chosen_psi_ue: psi_ue,
        quantization,
    }
}

/// Beamsteering with exact steering frequencies: `F_A = A_bs`, `W_A = A_ue^H`.
pub fn analog_infinite(
    paths: &PathParams,
    bs: &ArrayGeometry,
    ue: &ArrayGeometry,
) -> AnalogBeamformers {
    build_beamformers(bs, ue, paths.psi_bs(bs), paths.psi_ue(ue), None)
}

fn quantize_side(
    psis: &[f64],
    cb: &Codebook,
    policy: CollisionPolicy,
) -> (Vec<usize>, bool, bool) {
    let mut indices = Vec::with_capacity(psis.len());
    let mut clamped = false;
    for &psi in psis {
        let q = quantize_psi(psi, cb);
        clamped |= q.clamped;
        let mut index = q.index;
        if policy == CollisionPolicy::DistinctEntries && indices.contains(&index) {
            let mut order: Vec<usize> = (0..cb.size).collect();
            order.sort_by(|&a, &b| {
                let da = (psi - cb.entries_psi[a]).abs();
                let db = (psi - cb.entries_psi[b]).abs();
                da.total_cmp(&db).then(a.cmp(&b))
            });
            if let Some(&free) = order.iter().find(|i| !indices.contains(*i)) {
                index = free;
            }
        }
        indices.push(index);
    }
    let collision = (1..indices.len()).any(|i| indices[..i].contains(&indices[i]));
    (indices, collision, clamped)
}

/// Beamsteering restricted to codebook entries, each path snapped to the
/// nearest entry on either side.
pub fn analog_finite(
    paths: &PathParams,
    bs: &ArrayGeometry,
    ue: &ArrayGeometry,
    cb_bs: &Codebook,
    cb_ue: &Codebook,
    policy: CollisionPolicy,
) -> Result<AnalogBeamformers> {
    analog_quantized(paths, bs, ue, Some(cb_bs), Some(cb_ue), policy)
}

/// Like [`analog_finite`], but a side without a codebook steers exactly.
pub fn analog_quantized(
    paths: &PathParams,
    bs: &ArrayGeometry,
    ue: &ArrayGeometry,
    cb_bs: Option<&Codebook>,
    cb_ue: Option<&Codebook>,
    policy: CollisionPolicy,
) -> Result<AnalogBeamformers> {
    for (side, geom, cb) in [("base station", bs, cb_bs), ("user", ue, cb_ue)] {
        if let Some(cb) = cb {
            if (geom.d_over_lambda - cb.d_over_lambda).abs() > 1e-12 {
                return Err(Error::config(format!(
                    "{side} codebook built for d/lambda {} but array has {}",
                    cb.d_over_lambda, geom.d_over_lambda
                )));
            }
        }
    }
    let psi_bs = paths.psi_bs(bs);
    let psi_ue = paths.psi_ue(ue);
    let side = |psis: &[f64], cb: Option<&Codebook>| match cb {
        Some(cb) => {
            let (idx, collision, clamped) = quantize_side(psis, cb, policy);
            let hat: Vec<f64> = idx.iter().map(|&i| cb.entries_psi[i]).collect();
            (hat, idx, collision, clamped)
        }
        None => (psis.to_vec(), Vec::new(), false, false),
    };
    let (hat_bs, index_bs, collision_bs, clamped_bs) = side(&psi_bs, cb_bs);
    let (hat_ue, index_ue, collision_ue, clamped_ue) = side(&psi_ue, cb_ue);
    let report = QuantizationReport {
        psi_err_bs: psi_bs.iter().zip(&hat_bs).map(|(p, q)| p - q).collect(),
        psi_err_ue: psi_ue.iter().zip(&hat_ue).map(|(p, q)| p - q).collect(),
        index_bs,
        index_ue,
        collision_bs,
        collision_ue,
        clamped: clamped_bs || clamped_ue,
    };
    Ok(build_beamformers(bs, ue, hat_bs, hat_ue, Some(report)))
}

/// Channel seen by the digital stage, with the receive-noise shaping `W W^H`.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveChannel {
    pub h_bar: ComplexMatrix,
    pub w_gram: ComplexMatrix,
}

pub fn effective_channel(
    w: &ComplexMatrix,
    h: &ComplexMatrix,
    f: &ComplexMatrix,
) -> Result<EffectiveChannel> {
    if w.ncols() != h.nrows() || h.ncols() != f.nrows() {
        return Err(Error::Dimension(format!(
            "cannot form W*H*F with W {}x{}, H {}x{}, F {}x{}",
            w.nrows(),
            w.ncols(),
            h.nrows(),
            h.ncols(),
            f.nrows(),
            f.ncols()
        )));
    }
    Ok(EffectiveChannel {
        h_bar: w * h * f,
        w_gram: w * w.adjoint(),
    })
}

/// Array-overlap amplitude `|sin(n*x/2) / (n*sin(x/2))|`, 1 at multiples of `2*pi`.
pub fn dirichlet_gain(n: usize, psi_err: f64) -> f64 {
    let n = n.max(1) as f64;
    let den = n * (psi_err / 2.0).sin();
    if den.abs() < 1e-12 {
        return 1.0;
    }
    ((n * psi_err / 2.0).sin() / den).abs().min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array_channel::{sample_paths, steering_vector, trial_rng};
    use crate::linalg::{diag_real, max_abs_diff};
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    #[test]
    fn svd_of_diagonal_and_identity() {
        let r = svd_reference(&diag_real(&[3.0, 1.0]), 2).unwrap();
        assert!((r.sigma_l[0] - 3.0).abs() < 1e-14 && (r.sigma_l[1] - 1.0).abs() < 1e-14);
        let r = svd_reference(&ComplexMatrix::identity(3, 3), 3).unwrap();
        assert!(r.sigma_l.iter().all(|s| (s - 1.0).abs() < 1e-14));
    }

    #[test]
    fn svd_rejects_oversized_rank() {
        assert!(matches!(
            svd_reference(&ComplexMatrix::identity(2, 3), 3),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn svd_phase_convention() {
        let bs = ArrayGeometry::half_wavelength(6).unwrap();
        let ue = ArrayGeometry::half_wavelength(4).unwrap();
        let paths = sample_paths(3, &[1.0; 3], &mut trial_rng(11, 0)).unwrap();
        let h = response_matrix(&ue, &paths.psi_ue(&ue))
            * crate::linalg::diag(&paths.gains)
            * response_matrix(&bs, &paths.psi_bs(&bs)).adjoint();
        let r = svd_reference(&h, 3).unwrap();
        for c in 0..3 {
            let col = r.u_l.column(c);
            let big = col.iter().max_by(|a, b| a.norm().total_cmp(&b.norm())).unwrap();
            assert!(big.im.abs() < 1e-12 && big.re >= 0.0);
        }
        let again = svd_reference(&h, 3).unwrap();
        assert_eq!(r, again);
    }

    #[test]
    fn codebook_of_four() {
        let cb = build_codebook(4, 0.5).unwrap();
        let want = [-PI, -FRAC_PI_2, 0.0, FRAC_PI_2];
        for (a, b) in cb.entries_psi.iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
        let single = build_codebook(1, 0.5).unwrap();
        assert_eq!(single.entries_psi, vec![-PI]);
        assert!(build_codebook(0, 0.5).is_err());
    }

    #[test]
    fn codebook_spacing_constant() {
        let cb = build_codebook(37, 0.7).unwrap();
        for w in cb.entries_psi.windows(2) {
            assert!((w[1] - w[0] - cb.spacing()).abs() < 1e-12);
        }
    }

    #[test]
    fn quantize_examples() {
        let cb = build_codebook(4, 0.5).unwrap();
        let q = quantize_psi(0.3 * PI, &cb);
        assert_eq!(q.index, 3);
        assert_eq!(q.psi_hat, FRAC_PI_2);
        let q = quantize_psi(-FRAC_PI_2, &cb);
        assert_eq!((q.index, q.psi_hat - -FRAC_PI_2), (1, 0.0));
        // equidistant between 0 and pi/2
        let q = quantize_psi(FRAC_PI_4, &cb);
        assert_eq!(q.index, 2);
        assert!(!q.clamped);
    }

    #[test]
    fn quantize_out_of_range_clamps() {
        let cb = build_codebook(4, 0.5).unwrap();
        let q = quantize_psi(4.0, &cb);
        assert!(q.clamped);
        assert_eq!(q.index, 3);
        let q = quantize_psi(-4.0, &cb);
        assert!(q.clamped);
        assert_eq!(q.index, 0);
    }

    #[test]
    fn infinite_beamformers_are_channel_steering_vectors() {
        let bs = ArrayGeometry::half_wavelength(8).unwrap();
        let ue = ArrayGeometry::half_wavelength(4).unwrap();
        let paths = sample_paths(3, &[1.0 / 3.0; 3], &mut trial_rng(5, 2)).unwrap();
        let bf = analog_infinite(&paths, &bs, &ue);
        for l in 0..3 {
            let col = steering_vector(&bs, bs.psi_from_angle(paths.aod[l]));
            assert_eq!(bf.f_a.column(l), col.column(0));
        }
        let a_ue = response_matrix(&ue, &paths.psi_ue(&ue));
        let w_tilde = &bf.w_a * a_ue;
        for l in 0..3 {
            assert!((w_tilde[(l, l)] - Complex64::new(1.0, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn single_path_beamformer() {
        let bs = ArrayGeometry::half_wavelength(8).unwrap();
        let ue = ArrayGeometry::half_wavelength(4).unwrap();
        let paths = sample_paths(1, &[1.0], &mut trial_rng(5, 3)).unwrap();
        let bf = analog_infinite(&paths, &bs, &ue);
        assert_eq!(bf.f_a.shape(), (8, 1));
        assert!((bf.f_a.norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn finite_codebook_covering_exact_angles_matches_infinite() {
        let bs = ArrayGeometry::half_wavelength(8).unwrap();
        let ue = ArrayGeometry::half_wavelength(4).unwrap();
        let cb_bs = build_codebook(8, 0.5).unwrap();
        let cb_ue = build_codebook(4, 0.5).unwrap();
        // pick angles whose psi land on entries: psi = pi * sin(angle)
        let aod = vec![(cb_bs.entries_psi[3] / PI).asin(), (cb_bs.entries_psi[6] / PI).asin()];
        let aoa = vec![(cb_ue.entries_psi[1] / PI).asin(), (cb_ue.entries_psi[2] / PI).asin()];
        let paths = PathParams::new(
            aod,
            aoa,
            vec![Complex64::new(1.0, 0.0); 2],
            vec![0.5, 0.5],
        )
        .unwrap();
        let fin = analog_finite(&paths, &bs, &ue, &cb_bs, &cb_ue, CollisionPolicy::Allow).unwrap();
        let inf = analog_infinite(&paths, &bs, &ue);
        assert!(max_abs_diff(&fin.f_a, &inf.f_a) < 1e-12);
        assert!(max_abs_diff(&fin.w_a, &inf.w_a) < 1e-12);
        let rep = fin.quantization.unwrap();
        assert!(rep.psi_err_bs.iter().chain(&rep.psi_err_ue).all(|e| e.abs() < 1e-12));
    }

    #[test]
    fn quantization_error_within_half_spacing() {
        let bs = ArrayGeometry::half_wavelength(16).unwrap();
        let ue = ArrayGeometry::half_wavelength(8).unwrap();
        for c in [4usize, 16, 33, 128] {
            let cb_bs = build_codebook(c, 0.5).unwrap();
            let cb_ue = build_codebook(c, 0.5).unwrap();
            for t in 0..50 {
                let paths = sample_paths(3, &[1.0 / 3.0; 3], &mut trial_rng(9, t)).unwrap();
                let rep = analog_finite(&paths, &bs, &ue, &cb_bs, &cb_ue, CollisionPolicy::Allow)
                    .unwrap()
                    .quantization
                    .unwrap();
                for (i, e) in rep.psi_err_bs.iter().enumerate() {
                    let psi = bs.psi_from_angle(paths.aod[i]);
                    // the top edge psi = pi sits a full step above the last entry
                    if psi < PI - PI / c as f64 {
                        assert!(e.abs() <= PI / c as f64 + 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn collisions_are_reported_and_resolvable() {
        let bs = ArrayGeometry::half_wavelength(8).unwrap();
        let ue = ArrayGeometry::half_wavelength(8).unwrap();
        let cb = build_codebook(8, 0.5).unwrap();
        let paths = PathParams::new(
            vec![0.2, 0.2],
            vec![-0.4, -0.4],
            vec![Complex64::new(1.0, 0.0); 2],
            vec![0.5, 0.5],
        )
        .unwrap();
        let rep = analog_finite(&paths, &bs, &ue, &cb, &cb, CollisionPolicy::Allow)
            .unwrap()
            .quantization
            .unwrap();
        assert!(rep.collision_bs && rep.collision_ue);

        let rep = analog_finite(&paths, &bs, &ue, &cb, &cb, CollisionPolicy::DistinctEntries)
            .unwrap()
            .quantization
            .unwrap();
        assert!(!rep.collision_bs && !rep.collision_ue);
        assert_ne!(rep.index_bs[0], rep.index_bs[1]);
    }

    #[test]
    fn effective_channel_identity_and_mismatch() {
        let bs = ArrayGeometry::half_wavelength(3).unwrap();
        let paths = sample_paths(2, &[1.0, 1.0], &mut trial_rng(1, 1)).unwrap();
        let h = response_matrix(&bs, &paths.psi_bs(&bs));
        let h = &h * h.adjoint();
        let eye = ComplexMatrix::identity(3, 3);
        let eff = effective_channel(&eye, &h, &eye).unwrap();
        assert_eq!(eff.h_bar, h);
        assert!(matches!(
            effective_channel(&ComplexMatrix::identity(2, 2), &h, &eye),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn effective_channel_single_matched_path() {
        let bs = ArrayGeometry::half_wavelength(8).unwrap();
        let ue = ArrayGeometry::half_wavelength(4).unwrap();
        let paths = sample_paths(1, &[1.0], &mut trial_rng(2, 0)).unwrap();
        let budget = crate::array_channel::LinkBudget {
            tx_power: 1.0,
            noise_power: 1.0,
            path_loss: 1.0,
            snr: 1.0,
            beta: 32.0,
        };
        let ch = crate::array_channel::assemble_channel(&paths, &bs, &ue, &budget);
        let bf = analog_infinite(&paths, &bs, &ue);
        let eff = effective_channel(&bf.w_a, &ch.h, &bf.f_a).unwrap();
        assert!((eff.h_bar[(0, 0)] - ch.scaled_gains[0]).norm() < 1e-12);
    }

    #[test]
    fn dirichlet_examples() {
        assert_eq!(dirichlet_gain(8, 0.0), 1.0);
        assert!(dirichlet_gain(8, FRAC_PI_4) < 1e-15);
        // sin(pi/4) / (8 sin(pi/32)) evaluated independently
        let want = (PI / 4.0).sin() / (8.0 * (PI / 32.0).sin());
        assert!((dirichlet_gain(8, PI / 16.0) - want).abs() < 1e-15);
        assert!((dirichlet_gain(8, PI / 16.0) - 0.901764195).abs() < 1e-9);
        assert_eq!(dirichlet_gain(8, 2.0 * PI), 1.0);
    }
}
