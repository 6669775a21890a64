//! Single-step integrators for the diffusive unravelling.
//!
//! Both steppers accept the Hamiltonian and a list of Lindblad operators
//! taken literally. Channels whose operator is exactly zero are inactive and
//! consume no noise.

use crate::error::{Error, Result};
use crate::matrix::{ComplexMatrix, C64, I};
use crate::spin::DensityMatrix;

use super::noise::NoiseSource;

const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Entries smaller than this are set to zero after each step. Amplitudes
/// of eliminated eigenstates otherwise decay into subnormal floats, which
/// are orders of magnitude slower to operate on.
pub const UNDERFLOW_FLUSH: f64 = 1e-200;

#[inline]
fn flush(z: C64) -> C64 {
    C64::new(
        if z.re.abs() < UNDERFLOW_FLUSH { 0.0 } else { z.re },
        if z.im.abs() < UNDERFLOW_FLUSH { 0.0 } else { z.im },
    )
}

#[inline]
fn flush_real(x: f64) -> f64 {
    if x.abs() < UNDERFLOW_FLUSH {
        0.0
    } else {
        x
    }
}

/// The incremental pair `M± = (I + A±)/√2` with
/// `A± = −iH dt − ½ L†L dt ± L √dt`.
pub fn kraus_operators(h: &ComplexMatrix, l: &ComplexMatrix, dt: f64) -> [ComplexMatrix; 2] {
    let n = h.dim();
    let ldl = l.dagger() * *l;
    let base = h.scale(-I * dt) - ldl.scale_real(0.5 * dt);
    let kick = l.scale_real(dt.sqrt());
    let id = ComplexMatrix::identity(n);
    [
        (id + base + kick).scale_real(FRAC_1_SQRT_2),
        (id + base - kick).scale_real(FRAC_1_SQRT_2),
    ]
}

fn active<'a>(channels: &'a [ComplexMatrix]) -> impl Iterator<Item = &'a ComplexMatrix> {
    channels.iter().filter(|l| !l.is_zero())
}

fn normalise(mat: ComplexMatrix) -> ComplexMatrix {
    let herm = mat.hermitian_part();
    let tr = herm.trace().re;
    herm.map(|z| flush(z / tr))
}

fn degenerate(total: f64, rho: &ComplexMatrix) -> Error {
    Error::DegenerateStep {
        time: f64::NAN,
        total,
        state: format!("{rho:?}"),
    }
}

/// One Kraus step. Active channels are applied one after another; the
/// Hamiltonian enters with the first of them (or on its own when no channel
/// is active).
pub fn kraus_step(
    rho: &DensityMatrix,
    h: &ComplexMatrix,
    channels: &[ComplexMatrix],
    dt: f64,
    noise: &mut NoiseSource,
) -> Result<DensityMatrix> {
    let mut state = *rho.matrix();
    let zero = ComplexMatrix::zeros(state.dim());
    let mut hamiltonian = if h.is_zero() { None } else { Some(*h) };
    let mut any = false;
    for l in active(channels) {
        any = true;
        let ham = hamiltonian.take().unwrap_or(zero);
        let [mp, mm] = kraus_operators(&ham, l, dt);
        let sp = mp * state * mp.dagger();
        let sm = mm * state * mm.dagger();
        let (pp, pm) = (sp.trace().re, sm.trace().re);
        let total = pp + pm;
        if !(total > 0.0) || !total.is_finite() {
            return Err(degenerate(total, &state));
        }
        let chosen = if noise.uniform() < pp / total { sp } else { sm };
        state = normalise(chosen);
    }
    if !any {
        match hamiltonian {
            None => return Ok(*rho),
            Some(ham) => {
                let m = ComplexMatrix::identity(state.dim()) + ham.scale(-I * dt);
                state = normalise(m * state * m.dagger());
            }
        }
    }
    Ok(DensityMatrix::from_matrix_unchecked(state))
}

/// One Euler–Maruyama step of
/// `dρ = −i[H,ρ]dt + Σ_k D[L_k]ρ dt + Σ_k (ρL_k† + L_kρ − Tr[ρ(L_k + L_k†)]ρ) dW_k`,
/// followed by re-Hermitisation and trace renormalisation. Positivity is
/// not enforced.
pub fn euler_step(
    rho: &DensityMatrix,
    h: &ComplexMatrix,
    channels: &[ComplexMatrix],
    dt: f64,
    noise: &mut NoiseSource,
) -> DensityMatrix {
    let r = *rho.matrix();
    let has_h = !h.is_zero();
    if !has_h && active(channels).next().is_none() {
        return *rho;
    }
    let mut d = ComplexMatrix::zeros(r.dim());
    if has_h {
        d = d + (*h * r - r * *h).scale(-I * dt);
    }
    for l in active(channels) {
        let ld = l.dagger();
        let ldl = ld * *l;
        let dissipator = *l * r * ld - (ldl * r + r * ldl).scale_real(0.5);
        let mean = (r * (*l + ld)).trace().re;
        let diffusion = r * ld + *l * r - r.scale_real(mean);
        let dw = noise.wiener(dt);
        d = d + dissipator.scale_real(dt) + diffusion.scale_real(dw);
    }
    DensityMatrix::from_matrix_unchecked(normalise(r + d))
}

/// Steps [`DiagonalKernel::kraus_unnormalised`] may take between
/// renormalisations.
pub(crate) const RENORM_INTERVAL: u32 = 16;

/// Scales a positive-trace matrix to unit trace.
pub(crate) fn renormalise(rho: &mut ComplexMatrix) {
    let n = rho.dim();
    let tr: f64 = (0..n).map(|i| rho.get(i, i).re).sum();
    let s = 1.0 / tr;
    for i in 0..n {
        for j in 0..n {
            rho.set(i, j, rho.get(i, j) * s);
        }
    }
}

/// 1/x, using 2 − x when x is within 1e-8 of one (error below 1e-16).
#[inline]
fn reciprocal_near_one(x: f64) -> f64 {
    if (x - 1.0).abs() < 1e-8 {
        2.0 - x
    } else {
        1.0 / x
    }
}

/// Stepper for `H = 0` and a single Hermitian channel, acting on the state
/// expressed in the channel's eigenbasis. Every Kraus operator is then
/// diagonal, so a step costs O(d²) real multiplications. It draws exactly
/// the same noise as [`kraus_step`] / [`euler_step`] and agrees with them
/// to rounding.
#[derive(Clone, Copy, Debug)]
pub(crate) struct DiagonalKernel {
    dim: usize,
    lambda: [f64; 3],
    plus: [f64; 3],
    minus: [f64; 3],
    dt: f64,
}

impl DiagonalKernel {
    /// `lambda` are the eigenvalues of L in the chosen basis order.
    pub(crate) fn new(lambda: &[f64], dt: f64) -> Self {
        let dim = lambda.len();
        let sq = dt.sqrt();
        let mut k = DiagonalKernel {
            dim,
            lambda: [0.0; 3],
            plus: [0.0; 3],
            minus: [0.0; 3],
            dt,
        };
        for (i, &l) in lambda.iter().enumerate() {
            k.lambda[i] = l;
            let base = 1.0 - 0.5 * l * l * dt;
            k.plus[i] = (base + l * sq) * FRAC_1_SQRT_2;
            k.minus[i] = (base - l * sq) * FRAC_1_SQRT_2;
        }
        k
    }

    #[cfg(test)]
    pub(crate) fn kraus(&self, rho: &mut ComplexMatrix, noise: &mut NoiseSource) -> Result<()> {
        self.kraus_unnormalised(rho, noise)?;
        renormalise(rho);
        Ok(())
    }

    /// The Kraus step without dividing by the outcome probability. The
    /// outcome choice only depends on ratios, so the trace may drift; it
    /// shrinks by about half per step, and callers renormalise at least
    /// every [`RENORM_INTERVAL`] steps.
    #[inline(always)]
    pub(crate) fn kraus_unnormalised(&self, rho: &mut ComplexMatrix, noise: &mut NoiseSource) -> Result<()> {
        let n = self.dim;
        let (mut pp, mut pm) = (0.0, 0.0);
        for i in 0..n {
            let d = rho.get(i, i).re;
            pp += self.plus[i] * self.plus[i] * d;
            pm += self.minus[i] * self.minus[i] * d;
        }
        let total = pp + pm;
        if !(total > 0.0) || !total.is_finite() {
            return Err(degenerate(total, rho));
        }
        let m = if noise.uniform() * total < pp {
            &self.plus
        } else {
            &self.minus
        };
        for i in 0..n {
            rho.set(i, i, C64::new(flush_real(rho.get(i, i).re * m[i] * m[i]), 0.0));
            for j in i + 1..n {
                let z = flush(rho.get(i, j) * (m[i] * m[j]));
                rho.set(i, j, z);
                rho.set(j, i, z.conj());
            }
        }
        Ok(())
    }

    pub(crate) fn euler(&self, rho: &mut ComplexMatrix, noise: &mut NoiseSource) {
        let n = self.dim;
        let l = &self.lambda;
        let mut mean = 0.0;
        for i in 0..n {
            mean += l[i] * rho.get(i, i).re;
        }
        let dw = noise.wiener(self.dt);
        let mut diag = [0.0; 3];
        let mut tr = 0.0;
        for i in 0..n {
            diag[i] = flush_real(rho.get(i, i).re * (1.0 + 2.0 * (l[i] - mean) * dw));
            tr += diag[i];
        }
        let s = reciprocal_near_one(tr);
        for i in 0..n {
            rho.set(i, i, C64::new(diag[i] * s, 0.0));
            for j in i + 1..n {
                let gap = l[i] - l[j];
                let factor = 1.0 - 0.5 * gap * gap * self.dt + (l[i] + l[j] - 2.0 * mean) * dw;
                let z = flush(rho.get(i, j) * (factor * s));
                rho.set(i, j, z);
                rho.set(j, i, z.conj());
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin::{pauli, Label, Observable, Preset, Spin, SpinModel};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn zero(dim: usize) -> ComplexMatrix {
        ComplexMatrix::zeros(dim)
    }

    #[test]
    fn no_channels_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rho = DensityMatrix::random_mixed(3, &mut rng);
        let mut noise = NoiseSource::new(0);
        let out = kraus_step(&rho, &zero(3), &[], 1e-4, &mut noise).unwrap();
        assert_eq!(out, rho);
        let out = kraus_step(&rho, &zero(3), &[zero(3)], 1e-4, &mut noise).unwrap();
        assert_eq!(out, rho);
        assert_eq!(euler_step(&rho, &zero(3), &[zero(3)], 1e-4, &mut noise), rho);
        // Nothing was drawn.
        assert_eq!(noise.uniform().to_bits(), NoiseSource::new(0).uniform().to_bits());
    }

    #[test]
    fn eigenprojectors_are_fixed_points() {
        for spin in [Spin::Half, Spin::One] {
            let m = SpinModel::build(spin);
            let l = m.channel_operator(Observable::Sz).scale_real(1.7);
            let mut noise = NoiseSource::new(5);
            for &label in m.labels() {
                let rho = Preset::EigZ(label).build(&m).unwrap();
                for _ in 0..100 {
                    let k = kraus_step(&rho, &zero(m.dim()), &[l], 1e-4, &mut noise).unwrap();
                    assert!(k.matrix().max_abs_diff(rho.matrix()) <= 1e-12);
                    let e = euler_step(&rho, &zero(m.dim()), &[l], 1e-4, &mut noise);
                    assert!(e.matrix().max_abs_diff(rho.matrix()) <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn spin_half_first_step_kick() {
        // ρ = I/2, L = aσ_z: one step gives r_z = ±2ce/(c² + e²) with
        // c = 1 − a²dt/2, e = a√dt, i.e. ±2a√dt to leading order.
        let a: f64 = 1.3;
        let dt: f64 = 1e-4;
        let c = 1.0 - 0.5 * a * a * dt;
        let e = a * dt.sqrt();
        let exact = 2.0 * c * e / (c * c + e * e);
        let l = pauli()[2].scale_real(a);
        let mut noise = NoiseSource::new(9);
        let mut seen = [false; 2];
        for _ in 0..50 {
            let out = kraus_step(&DensityMatrix::maximally_mixed(2), &zero(2), &[l], dt, &mut noise).unwrap();
            let rz = out.expectation(&pauli()[2]);
            assert!((rz.abs() - exact).abs() < 1e-14);
            assert!((rz.abs() - 2.0 * a * dt.sqrt()).abs() < 4.0 * a.powi(3) * dt.powf(1.5));
            seen[(rz > 0.0) as usize] = true;
        }
        assert_eq!(seen, [true, true]);
    }

    #[test]
    fn kraus_pair_has_no_jump_branch() {
        // Both branches stay within O(√dt) of I/√2; a jump unravelling would
        // have one branch proportional to L itself.
        let m = SpinModel::build(Spin::One);
        let l = m.channel_operator(Observable::Sx).scale_real(2.0);
        let h = *m.sz();
        for dt in [1e-2, 1e-4, 1e-6] {
            let [mp, mm] = kraus_operators(&h, &l, dt);
            let half_id = ComplexMatrix::identity(3).scale_real(FRAC_1_SQRT_2);
            for op in [mp, mm] {
                assert!(op.max_abs_diff(&half_id) <= 2.0 * dt.sqrt() * l.max_abs() + 10.0 * dt);
            }
            // Σ M†M = I + B†B with B = −iH dt − ½L†L dt.
            let completeness = mp.dagger() * mp + mm.dagger() * mm;
            let b = h.scale(-I * dt) - (l.dagger() * l).scale_real(0.5 * dt);
            let expect = ComplexMatrix::identity(3) + b.dagger() * b;
            assert!(completeness.max_abs_diff(&expect) < 1e-14);
        }
    }

    #[test]
    fn kraus_preserves_invariants_with_hamiltonian() {
        let m = SpinModel::build(Spin::One);
        let h = *m.sy();
        let l = m.channel_operator(Observable::Sx).scale_real(0.8);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut rho = DensityMatrix::random_pure(3, &mut rng);
        let mut noise = NoiseSource::new(3);
        for _ in 0..5000 {
            rho = kraus_step(&rho, &h, &[l, zero(3)], 1e-3, &mut noise).unwrap();
        }
        rho.validate().unwrap();
        // Unitary-only evolution also stays valid.
        let unitary = kraus_step(&rho, &h, &[], 1e-3, &mut noise).unwrap();
        unitary.validate().unwrap();
    }

    #[test]
    fn euler_mean_increment_matches_lindblad_generator() {
        // Spin-1/2, L = aσ_z: E[Δr_x]/dt = −2a² r_x.
        let a = 1.0;
        let dt = 1e-4;
        let l = pauli()[2].scale_real(a);
        let rho = DensityMatrix::pure(&[C64::new(1.0, 0.0), C64::new(1.0, 0.0)]).unwrap();
        let rx0 = rho.expectation(&pauli()[0]);
        let mut noise = NoiseSource::new(17);
        let n = 100_000;
        let (mut sum, mut sq) = (0.0, 0.0);
        for _ in 0..n {
            let d = euler_step(&rho, &zero(2), &[l], dt, &mut noise).expectation(&pauli()[0]) - rx0;
            sum += d;
            sq += d * d;
        }
        let mean = sum / n as f64;
        let se = ((sq / n as f64 - mean * mean) / n as f64).sqrt();
        let expect = -2.0 * a * a * rx0 * dt;
        assert!((mean - expect).abs() <= 3.0 * se + 1e-12, "{mean} vs {expect} (se {se})");
    }

    #[test]
    fn euler_mean_step_matches_dissipator_spin_one() {
        let m = SpinModel::build(Spin::One);
        let l = m.channel_operator(Observable::Sx).scale_real(1.5);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let rho = DensityMatrix::random_mixed(3, &mut rng);
        let r = *rho.matrix();
        let ldl = l * l;
        let drift = (l * r * l - (ldl * r + r * ldl).scale_real(0.5)).scale_real(1e-4);
        let mut noise = NoiseSource::new(8);
        let n = 100_000usize;
        let mut sum = ComplexMatrix::zeros(3);
        let mut sq = [[0.0f64; 3]; 3];
        for _ in 0..n {
            let d = *euler_step(&rho, &zero(3), &[l], 1e-4, &mut noise).matrix() - r;
            sum = sum + d;
            for i in 0..3 {
                for j in 0..3 {
                    sq[i][j] += d.get(i, j).norm_sqr();
                }
            }
        }
        let mean = sum.scale_real(1.0 / n as f64);
        for i in 0..3 {
            for j in 0..3 {
                let var = sq[i][j] / n as f64 - mean.get(i, j).norm_sqr();
                let se = (var / n as f64).sqrt();
                let dev = (mean.get(i, j) - drift.get(i, j)).norm();
                assert!(dev <= 3.0 * se * std::f64::consts::SQRT_2 + 1e-12, "({i},{j}) {dev} > 3·{se}");
            }
        }
    }

    #[test]
    fn diagonal_kernel_tracks_dense_steppers() {
        let m = SpinModel::build(Spin::One);
        let g = 2.0;
        let basis = m.basis(Observable::Sx);
        let mut u = ComplexMatrix::zeros(3);
        for (k, v) in basis.vectors.iter().enumerate() {
            for i in 0..3 {
                u.set(i, k, v[i]);
            }
        }
        let l = m.channel_operator(Observable::Sx).scale_real(g);
        let lambda: Vec<f64> = basis.eigenvalues.iter().map(|e| g * e).collect();
        let dt = 1e-4;
        let kernel = DiagonalKernel::new(&lambda, dt);
        let rho0 = Preset::EigZ(Label::Minus).build(&m).unwrap();

        let mut dense = rho0;
        let mut fast = rho0.matrix().congruence_hermitian(&u.dagger());
        let (mut n1, mut n2) = (NoiseSource::new(21), NoiseSource::new(21));
        for _ in 0..5000 {
            dense = kraus_step(&dense, &zero(3), &[l], dt, &mut n1).unwrap();
            kernel.kraus(&mut fast, &mut n2).unwrap();
        }
        let back = fast.congruence_hermitian(&u);
        assert!(back.max_abs_diff(dense.matrix()) < 1e-10, "{back:?} vs {dense:?}");

        let mut dense = rho0;
        let mut fast = rho0.matrix().congruence_hermitian(&u.dagger());
        for _ in 0..5000 {
            dense = euler_step(&dense, &zero(3), &[l], dt, &mut n1);
            kernel.euler(&mut fast, &mut n2);
        }
        let back = fast.congruence_hermitian(&u);
        assert!(back.max_abs_diff(dense.matrix()) < 1e-10);
    }
}
