//! Deterministic ensemble-mean evolution under the Lindblad master equation.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::matrix::{ComplexMatrix, C64, I};
use crate::spin::{DensityMatrix, SpinModel};

use super::schedule::MeasurementSchedule;

/// Row-major vectorisation: `vec(A ρ B) = (A ⊗ Bᵀ) vec(ρ)`.
fn kron_left_right(a: &ComplexMatrix, b: &ComplexMatrix) -> DMatrix<C64> {
    let n = a.dim();
    DMatrix::from_fn(n * n, n * n, |r, c| {
        let (i, j) = (r / n, r % n);
        let (k, l) = (c / n, c % n);
        a.get(i, k) * b.get(l, j)
    })
}

/// Generator 𝓛 acting on row-major vec(ρ).
pub fn superoperator(h: &ComplexMatrix, channels: &[ComplexMatrix]) -> DMatrix<C64> {
    let n = h.dim();
    let id = ComplexMatrix::identity(n);
    let mut gen = (kron_left_right(h, &id) - kron_left_right(&id, h)) * (-I);
    for l in channels {
        let ld = l.dagger();
        let ldl = ld * *l;
        gen += kron_left_right(l, &ld);
        gen -= kron_left_right(&ldl, &id) * C64::new(0.5, 0.0);
        gen -= kron_left_right(&id, &ldl) * C64::new(0.5, 0.0);
    }
    gen
}

/// ρ(t) = exp(𝓛 t) ρ0 for time-independent H and channels.
pub fn lindblad_propagate(
    rho0: &DensityMatrix,
    h: &ComplexMatrix,
    channels: &[ComplexMatrix],
    t: f64,
) -> Result<DensityMatrix> {
    let n = rho0.dim();
    if h.dim() != n || channels.iter().any(|l| l.dim() != n) {
        return Err(Error::DimensionMismatch { left: n, right: h.dim() });
    }
    if t == 0.0 {
        return Ok(*rho0);
    }
    let gen = superoperator(h, channels) * C64::new(t, 0.0);
    let prop = gen.exp();
    let v = DMatrix::from_fn(n * n, 1, |r, _| rho0.matrix().get(r / n, r % n));
    let out = prop * v;
    let mut rho = ComplexMatrix::zeros(n);
    for r in 0..n * n {
        rho.set(r / n, r % n, out[(r, 0)]);
    }
    if !rho.is_finite() {
        return Err(Error::NonFinite);
    }
    let herm = rho.hermitian_part();
    let tr = herm.trace().re;
    Ok(DensityMatrix::from_matrix_unchecked(herm.scale_real(1.0 / tr)))
}

/// Mean state after time `t` of the alternating protocol (H = 0), obtained
/// by chaining exact propagators over each constant-coupling stretch.
pub fn lindblad_schedule(
    model: &SpinModel,
    schedule: &MeasurementSchedule,
    rho0: &DensityMatrix,
    t: f64,
) -> Result<DensityMatrix> {
    let half = 0.5 * schedule.period;
    let h = ComplexMatrix::zeros(model.dim());
    let mut rho = *rho0;
    let mut start = 0.0;
    let mut window = 0u64;
    while start < t {
        let end = (start + half).min(t);
        let obs = schedule.window_observable(window);
        let l = model.channel_operator(obs).scale_real(schedule.amplitude(obs));
        rho = lindblad_propagate(&rho, &h, &[l], end - start)?;
        start = end;
        window += 1;
    }
    Ok(rho)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin::{pauli, Label, Observable, Preset, Spin};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_time_is_identity() {
        let rho = DensityMatrix::maximally_mixed(2);
        let out = lindblad_propagate(&rho, &ComplexMatrix::zeros(2), &[pauli()[2]], 0.0).unwrap();
        assert_eq!(out, rho);
    }

    #[test]
    fn spin_half_coherence_decay() {
        let a = 0.7;
        let rho = DensityMatrix::pure(&[C64::new(1.0, 0.0), C64::new(1.0, 0.0)]).unwrap();
        let l = pauli()[2].scale_real(a);
        for t in [0.1, 0.5, 1.3] {
            let out = lindblad_propagate(&rho, &ComplexMatrix::zeros(2), &[l], t).unwrap();
            let rx = out.expectation(&pauli()[0]);
            assert!((rx - (-2.0 * a * a * t).exp()).abs() < 1e-12);
        }
    }

    #[test]
    fn spin_one_dephasing_rates() {
        let m = SpinModel::build(Spin::One);
        let a = 1.1;
        let t = 0.4;
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let rho = DensityMatrix::random_pure(3, &mut rng);
        let l = m.sz().scale_real(a);
        let out = lindblad_propagate(&rho, &ComplexMatrix::zeros(3), &[l], t).unwrap();
        let r0 = rho.matrix();
        let r = out.matrix();
        let e13 = (-2.0 * a * a * t).exp();
        let e12 = (-0.5 * a * a * t).exp();
        assert!((r.get(0, 2) - r0.get(0, 2) * e13).norm() < 1e-12);
        assert!((r.get(0, 1) - r0.get(0, 1) * e12).norm() < 1e-12);
        assert!((r.get(1, 2) - r0.get(1, 2) * e12).norm() < 1e-12);
        for i in 0..3 {
            assert!((r.get(i, i) - r0.get(i, i)).norm() < 1e-12);
        }
    }

    #[test]
    fn unitary_part_rotates() {
        // H = ω S_z rotates ⟨S_x⟩ into ⟨S_y⟩ at frequency ω.
        let m = SpinModel::build(Spin::Half);
        let rho = Preset::EigX(Label::Plus).build(&m).unwrap();
        let w = 2.0;
        let t = 0.3;
        let out = lindblad_propagate(&rho, &m.sz().scale_real(w), &[], t).unwrap();
        let [sx, sy, _] = m.spin_expectations(&out);
        assert!((sx - 0.5 * (w * t).cos()).abs() < 1e-12);
        assert!((sy - 0.5 * (w * t).sin()).abs() < 1e-12);
    }

    #[test]
    fn schedule_chains_windows() {
        let m = SpinModel::build(Spin::One);
        let s = MeasurementSchedule::from_strengths(1.0, 1.0, 2.0).unwrap();
        let rho = Preset::EigZ(Label::Minus).build(&m).unwrap();
        // After the S_z window the eigenstate is untouched; the S_x window
        // then dephases in the x basis.
        let mid = lindblad_schedule(&m, &s, &rho, 1.0).unwrap();
        assert!(mid.matrix().max_abs_diff(rho.matrix()) < 1e-12);
        let end = lindblad_schedule(&m, &s, &rho, 2.0).unwrap();
        let direct = lindblad_propagate(
            &rho,
            &ComplexMatrix::zeros(3),
            &[m.channel_operator(Observable::Sx).scale_real(s.b_max)],
            1.0,
        )
        .unwrap();
        assert!(end.matrix().max_abs_diff(direct.matrix()) < 1e-12);
    }
}
