//! Complex-field model of the four-path Mach-Zehnder switch fabric.
//!
//! The device is two 4x4 multiport couplers with a per-path phase stage
//! (and optional per-path loss) in between: `y = M_BS * L * M_theta * M_BS * x`.

use num_complex::Complex64;
use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};

/// Number of cores / interferometer paths.
pub const CORES: usize = 4;

/// Tolerance used for unitarity checks throughout the crate.
pub const UNITARITY_TOL: f64 = 1e-12;

/// Optical field amplitudes across the four cores. Power is `|amplitude|^2`,
/// normalized so that total input power 1.0 is the 0 dB reference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldVector {
    amps: [Complex64; CORES],
}

impl FieldVector {
    pub fn new(amps: [Complex64; CORES]) -> Result<Self> {
        if amps.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::Contract("field amplitudes must be finite".into()));
        }
        Ok(Self { amps })
    }

    /// Unit power launched into a single core.
    pub fn unit(core: usize) -> Self {
        let mut amps = [Complex64::ZERO; CORES];
        amps[core] = Complex64::ONE;
        Self { amps }
    }

    pub fn amplitudes(&self) -> &[Complex64; CORES] {
        &self.amps
    }

    pub fn total_power(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }
}

/// `p_i = |y_i|^2` in linear power units.
pub fn output_powers(y: &FieldVector) -> [f64; CORES] {
    let mut p = [0.0; CORES];
    for (pi, a) in p.iter_mut().zip(y.amps.iter()) {
        *pi = a.norm_sqr();
    }
    p
}

/// Per-path phases in radians, stored wrapped to `[0, 2*pi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseSet {
    phases: [f64; CORES],
}

pub fn wrap_phase(p: f64) -> f64 {
    let w = p.rem_euclid(TAU);
    // rem_euclid can return TAU itself for tiny negative inputs
    if w >= TAU {
        0.0
    } else {
        w
    }
}

impl PhaseSet {
    pub fn new(phases: [f64; CORES]) -> Result<Self> {
        if phases.iter().any(|p| !p.is_finite()) {
            return Err(Error::Contract("phases must be finite".into()));
        }
        Ok(Self {
            phases: phases.map(wrap_phase),
        })
    }

    pub fn zero() -> Self {
        Self {
            phases: [0.0; CORES],
        }
    }

    pub fn phases(&self) -> &[f64; CORES] {
        &self.phases
    }

    pub fn get(&self, path: usize) -> f64 {
        self.phases[path]
    }

    pub fn set(&mut self, path: usize, value: f64) {
        self.phases[path] = wrap_phase(value);
    }

    /// Element-wise sum, wrapped.
    pub fn add(&self, other: &PhaseSet) -> PhaseSet {
        let mut phases = [0.0; CORES];
        for i in 0..CORES {
            phases[i] = wrap_phase(self.phases[i] + other.phases[i]);
        }
        PhaseSet { phases }
    }

    /// Adds the same offset to every path (a global phase).
    pub fn offset_all(&self, offset: f64) -> PhaseSet {
        let mut phases = [0.0; CORES];
        for i in 0..CORES {
            phases[i] = wrap_phase(self.phases[i] + offset);
        }
        PhaseSet { phases }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixKind {
    Splitter,
    PhaseStage,
    Composed,
    Lossy,
}

/// 4x4 complex transfer matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferMatrix {
    entries: [[Complex64; CORES]; CORES],
    kind: MatrixKind,
}

impl TransferMatrix {
    pub fn from_entries(entries: [[Complex64; CORES]; CORES], kind: MatrixKind) -> Self {
        Self { entries, kind }
    }

    pub fn entries(&self) -> &[[Complex64; CORES]; CORES] {
        &self.entries
    }

    pub fn kind(&self) -> MatrixKind {
        self.kind
    }

    pub fn identity() -> Self {
        let mut entries = [[Complex64::ZERO; CORES]; CORES];
        for (i, row) in entries.iter_mut().enumerate() {
            row[i] = Complex64::ONE;
        }
        Self {
            entries,
            kind: MatrixKind::Composed,
        }
    }

    pub fn apply(&self, x: &FieldVector) -> FieldVector {
        let mut amps = [Complex64::ZERO; CORES];
        for (row, out) in self.entries.iter().zip(amps.iter_mut()) {
            for (m, a) in row.iter().zip(x.amps.iter()) {
                *out += m * a;
            }
        }
        FieldVector { amps }
    }

    pub fn mul(&self, rhs: &TransferMatrix) -> TransferMatrix {
        let mut entries = [[Complex64::ZERO; CORES]; CORES];
        for i in 0..CORES {
            for j in 0..CORES {
                let mut acc = Complex64::ZERO;
                for k in 0..CORES {
                    acc += self.entries[i][k] * rhs.entries[k][j];
                }
                entries[i][j] = acc;
            }
        }
        let kind = if self.kind == MatrixKind::Lossy || rhs.kind == MatrixKind::Lossy {
            MatrixKind::Lossy
        } else {
            MatrixKind::Composed
        };
        TransferMatrix { entries, kind }
    }

    /// Max-norm of `M^H M - I`.
    pub fn unitarity_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..CORES {
            for j in 0..CORES {
                let mut acc = Complex64::ZERO;
                for k in 0..CORES {
                    acc += self.entries[k][i].conj() * self.entries[k][j];
                }
                let target = if i == j { Complex64::ONE } else { Complex64::ZERO };
                worst = worst.max((acc - target).norm());
            }
        }
        worst
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_defect() < tol
    }

    /// Largest singular value, by power iteration on `M^H M`.
    pub fn max_singular_value(&self) -> f64 {
        let mut v = [Complex64::ONE; CORES];
        let mut lambda = 0.0;
        for _ in 0..200 {
            // w = M^H (M v)
            let mut mv = [Complex64::ZERO; CORES];
            for i in 0..CORES {
                for k in 0..CORES {
                    mv[i] += self.entries[i][k] * v[k];
                }
            }
            let mut w = [Complex64::ZERO; CORES];
            for i in 0..CORES {
                for k in 0..CORES {
                    w[i] += self.entries[k][i].conj() * mv[k];
                }
            }
            let norm: f64 = w.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            if norm == 0.0 {
                return 0.0;
            }
            lambda = norm;
            for (vi, wi) in v.iter_mut().zip(w.iter()) {
                *vi = wi / norm;
            }
        }
        lambda.sqrt()
    }
}

/// The normalized 4-point DFT coupler: `M_jk = (1/2) exp(-2*pi*i*j*k/4)`.
/// Every port pair splits 25% of the power. Entries are constructed exactly
/// (they are all in `{±1/2, ±i/2}`).
pub fn make_dft_splitter() -> TransferMatrix {
    let half = 0.5;
    let vals = [
        Complex64::new(half, 0.0),
        Complex64::new(0.0, -half),
        Complex64::new(-half, 0.0),
        Complex64::new(0.0, half),
    ];
    let mut entries = [[Complex64::ZERO; CORES]; CORES];
    for (j, row) in entries.iter_mut().enumerate() {
        for (k, e) in row.iter_mut().enumerate() {
            *e = vals[(j * k) % 4];
        }
    }
    TransferMatrix {
        entries,
        kind: MatrixKind::Splitter,
    }
}

/// The real Sylvester Hadamard coupler `(1/2) H_4`; also a uniform 25% split.
pub fn make_hadamard_splitter() -> TransferMatrix {
    let h: [[f64; 4]; 4] = [
        [1.0, 1.0, 1.0, 1.0],
        [1.0, -1.0, 1.0, -1.0],
        [1.0, 1.0, -1.0, -1.0],
        [1.0, -1.0, -1.0, 1.0],
    ];
    let mut entries = [[Complex64::ZERO; CORES]; CORES];
    for (j, row) in entries.iter_mut().enumerate() {
        for (k, e) in row.iter_mut().enumerate() {
            *e = Complex64::new(0.5 * h[j][k], 0.0);
        }
    }
    TransferMatrix {
        entries,
        kind: MatrixKind::Splitter,
    }
}

/// Diagonal phase stage `diag(e^{i*theta_1}, ..., e^{i*theta_4})`.
pub fn phase_stage(p: &PhaseSet) -> TransferMatrix {
    let mut entries = [[Complex64::ZERO; CORES]; CORES];
    for (i, row) in entries.iter_mut().enumerate() {
        row[i] = Complex64::from_polar(1.0, p.phases[i]);
    }
    TransferMatrix {
        entries,
        kind: MatrixKind::PhaseStage,
    }
}

/// Diagonal amplitude stage for per-path power losses in dB.
pub fn loss_stage(losses_db: &[f64; CORES]) -> Result<TransferMatrix> {
    if losses_db.iter().any(|l| !l.is_finite() || *l < 0.0) {
        return Err(Error::Contract("per-path losses must be >= 0 dB".into()));
    }
    let mut entries = [[Complex64::ZERO; CORES]; CORES];
    for (i, row) in entries.iter_mut().enumerate() {
        row[i] = Complex64::new(10f64.powf(-losses_db[i] / 20.0), 0.0);
    }
    Ok(TransferMatrix {
        entries,
        kind: MatrixKind::Lossy,
    })
}

/// Full device propagation `y = M_BS * L * M_theta * M_BS * x`.
///
/// The loss stage sits between the phase stage and the recombining splitter;
/// with zero losses the device is unitary and total power is conserved.
pub fn propagate(
    x: &FieldVector,
    splitter: &TransferMatrix,
    p: &PhaseSet,
    losses_db: &[f64; CORES],
) -> Result<FieldVector> {
    if !splitter.is_unitary(UNITARITY_TOL) {
        return Err(Error::Contract("splitter matrix is not unitary".into()));
    }
    let l = loss_stage(losses_db)?;
    let split = splitter.apply(x);
    let phased = phase_stage(p).apply(&split);
    let attenuated = l.apply(&phased);
    Ok(splitter.apply(&attenuated))
}

/// Routing phase table for the DFT splitter: `theta_k = 2*pi*m*k/4` steers
/// input core 0 entirely into output core `m`.
pub fn dft_routing_phases(target: usize) -> PhaseSet {
    let mut phases = [0.0; CORES];
    for (k, ph) in phases.iter_mut().enumerate() {
        *ph = wrap_phase(PI / 2.0 * (target * k) as f64);
    }
    PhaseSet { phases }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const NO_LOSS: [f64; 4] = [0.0; 4];

    #[test]
    fn dft_splitter_is_uniform_25_percent() {
        let m = make_dft_splitter();
        for row in m.entries() {
            for e in row {
                assert!((e.norm_sqr() - 0.25).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn dft_splitter_unitary() {
        assert!(make_dft_splitter().unitarity_defect() < 1e-12);
    }

    #[test]
    fn dft_squared_returns_input_up_to_global_phase() {
        // oracle: direct 4x4 multiplication
        let m = make_dft_splitter();
        let mm = m.mul(&m);
        let y = mm.apply(&FieldVector::unit(0));
        let p = output_powers(&y);
        assert!((p[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hadamard_entries_symmetric_unitary() {
        let m = make_hadamard_splitter();
        for row in m.entries() {
            for e in row {
                assert!((e.re.abs() - 0.5).abs() < 1e-15 && e.im == 0.0);
            }
        }
        assert!(m.unitarity_defect() < 1e-12);
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(m.entries()[i][j], m.entries()[j][i]);
            }
        }
    }

    #[test]
    fn phase_stage_basics() {
        let id = phase_stage(&PhaseSet::zero());
        assert!(id.unitarity_defect() < 1e-15);
        let m = phase_stage(&PhaseSet::new([PI, 0.0, 0.0, 0.0]).unwrap());
        assert!((m.entries()[0][0].re + 1.0).abs() < 1e-12);
        assert!((m.entries()[1][1].re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn propagate_identity_routing() {
        let y = propagate(
            &FieldVector::unit(0),
            &make_dft_splitter(),
            &PhaseSet::zero(),
            &NO_LOSS,
        )
        .unwrap();
        assert!((output_powers(&y)[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn propagate_dft_shift_routes_to_core_2() {
        let p = PhaseSet::new([0.0, PI / 2.0, PI, 3.0 * PI / 2.0]).unwrap();
        let y = propagate(&FieldVector::unit(0), &make_dft_splitter(), &p, &NO_LOSS).unwrap();
        assert!((output_powers(&y)[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dft_routing_property_all_targets() {
        // brute-force verified via the full matrix product
        for m in 0..4 {
            let y = propagate(
                &FieldVector::unit(0),
                &make_dft_splitter(),
                &dft_routing_phases(m),
                &NO_LOSS,
            )
            .unwrap();
            assert!(output_powers(&y)[m] >= 1.0 - 1e-12);
        }
    }

    #[test]
    fn lossless_propagation_conserves_power_1000_draws() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for splitter in [make_dft_splitter(), make_hadamard_splitter()] {
            for _ in 0..500 {
                let amps = core::array::from_fn(|_| {
                    Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
                });
                let x = FieldVector::new(amps).unwrap();
                let p = PhaseSet::new(core::array::from_fn(|_| rng.gen_range(0.0..TAU))).unwrap();
                let y = propagate(&x, &splitter, &p, &NO_LOSS).unwrap();
                assert!((y.total_power() - x.total_power()).abs() < 1e-12 * x.total_power().max(1.0));
            }
        }
    }

    #[test]
    fn non_unitary_splitter_rejected() {
        let bad = loss_stage(&[1.0, 0.0, 0.0, 0.0]).unwrap();
        let err = propagate(&FieldVector::unit(0), &bad, &PhaseSet::zero(), &NO_LOSS);
        assert!(err.is_err());
    }

    #[test]
    fn loss_stage_singular_values_bounded() {
        let l = loss_stage(&[3.3, 0.0, 1.0, 9.0]).unwrap();
        assert!(l.max_singular_value() <= 1.0 + 1e-12);
        assert_eq!(l.kind(), MatrixKind::Lossy);
    }

    #[test]
    fn output_powers_examples() {
        let y = FieldVector::new([
            Complex64::new(0.5, 0.0),
            Complex64::new(0.5, 0.0),
            Complex64::new(0.5, 0.0),
            Complex64::new(0.5, 0.0),
        ])
        .unwrap();
        assert_eq!(output_powers(&y), [0.25; 4]);
    }

    proptest! {
        #[test]
        fn global_phase_leaves_powers_unchanged(
            phases in proptest::array::uniform4(0.0..TAU),
            offset in 0.0..TAU,
        ) {
            let x = FieldVector::unit(0);
            let s = make_dft_splitter();
            let p = PhaseSet::new(phases).unwrap();
            let y0 = output_powers(&propagate(&x, &s, &p, &NO_LOSS).unwrap());
            let y1 = output_powers(&propagate(&x, &s, &p.offset_all(offset), &NO_LOSS).unwrap());
            for i in 0..4 {
                prop_assert!((y0[i] - y1[i]).abs() < 1e-12);
            }
        }

        #[test]
        fn phase_stage_always_unitary(phases in proptest::array::uniform4(0.0..TAU)) {
            let m = phase_stage(&PhaseSet::new(phases).unwrap());
            prop_assert!(m.unitarity_defect() < 1e-12);
            // |det| = 1 for a diagonal unitary
            let det: Complex64 = (0..4).map(|i| m.entries()[i][i]).product();
            prop_assert!((det.norm() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn composition_preserves_unitarity(
            a in proptest::array::uniform4(0.0..TAU),
            b in proptest::array::uniform4(0.0..TAU),
        ) {
            let m = make_dft_splitter()
                .mul(&phase_stage(&PhaseSet::new(a).unwrap()))
                .mul(&make_hadamard_splitter())
                .mul(&phase_stage(&PhaseSet::new(b).unwrap()));
            prop_assert!(m.unitarity_defect() < 1e-12);
        }
    }
}
