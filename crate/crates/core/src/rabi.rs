//! Truncated-Fock-space diagonalization of the cavity–qubit Hamiltonian, with and
//! without counter-rotating terms.
//!
//! Basis index `2n + q` with photon number `n` and qubit state `q` (0 = ground,
//! 1 = excited); σ_z = diag(−1, +1). Energies are in Hz.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::hybrid::{effective_coupling, qubit_frequency, resonant_detuning, HybridParams};
use crate::reflectance::{check_axis, SusceptibilityModel};
use crate::{Error, Result};

/// Largest cutoff [`converge_cutoff`] will try.
pub const MAX_CUTOFF: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruncatedHilbert {
    n_max: usize,
}

impl TruncatedHilbert {
    pub fn new(n_max: usize) -> Result<Self> {
        if n_max < 1 {
            return Err(Error::invalid("n_max", "must be ≥ 1"));
        }
        Ok(Self { n_max })
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn dim(&self) -> usize {
        2 * (self.n_max + 1)
    }

    pub fn index(n: usize, excited: bool) -> usize {
        2 * n + excited as usize
    }
}

/// Which Hamiltonian to diagonalize.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingModel {
    /// H = f_c·a†a + (f_q/2)σ_z + g(a† + a)σ_x.
    FullRabi,
    /// Counter-rotating terms a†σ₊ and aσ₋ dropped.
    JaynesCummings,
}

impl TryFrom<SusceptibilityModel> for CouplingModel {
    type Error = Error;

    fn try_from(m: SusceptibilityModel) -> Result<Self> {
        match m {
            SusceptibilityModel::FullRabi => Ok(CouplingModel::FullRabi),
            SusceptibilityModel::JaynesCummings => Ok(CouplingModel::JaynesCummings),
            SusceptibilityModel::BareCavity => Err(Error::invalid("model", "bare cavity has no qubit to diagonalize")),
        }
    }
}

pub fn build_hamiltonian(model: CouplingModel, f_c: f64, f_q: f64, g: f64, hilbert: TruncatedHilbert) -> DMatrix<f64> {
    let dim = hilbert.dim();
    let mut h = DMatrix::zeros(dim, dim);
    for n in 0..=hilbert.n_max {
        let nf = n as f64;
        h[(TruncatedHilbert::index(n, false), TruncatedHilbert::index(n, false))] = nf * f_c - 0.5 * f_q;
        h[(TruncatedHilbert::index(n, true), TruncatedHilbert::index(n, true))] = nf * f_c + 0.5 * f_q;
    }
    for n in 0..hilbert.n_max {
        let amp = g * ((n + 1) as f64).sqrt();
        // a†σ₋: |n, e⟩ → |n+1, g⟩.
        let (i, j) = (TruncatedHilbert::index(n + 1, false), TruncatedHilbert::index(n, true));
        h[(i, j)] = amp;
        h[(j, i)] = amp;
        if model == CouplingModel::FullRabi {
            // a†σ₊: |n, g⟩ → |n+1, e⟩.
            let (i, j) = (TruncatedHilbert::index(n + 1, true), TruncatedHilbert::index(n, false));
            h[(i, j)] = amp;
            h[(j, i)] = amp;
        }
    }
    h
}

/// Photon-number-plus-excitation parity, diag((−1)^(n+q)).
pub fn parity_operator(hilbert: TruncatedHilbert) -> DMatrix<f64> {
    DMatrix::from_diagonal(&DVector::from_fn(hilbert.dim(), |i, _| if i % 2 == (i / 2) % 2 { 1.0 } else { -1.0 }))
}

/// Cavity field quadrature a + a†.
pub fn field_operator(hilbert: TruncatedHilbert) -> DMatrix<f64> {
    let dim = hilbert.dim();
    let mut x = DMatrix::zeros(dim, dim);
    for n in 0..hilbert.n_max {
        let amp = ((n + 1) as f64).sqrt();
        for q in [false, true] {
            let (i, j) = (TruncatedHilbert::index(n + 1, q), TruncatedHilbert::index(n, q));
            x[(i, j)] = amp;
            x[(j, i)] = amp;
        }
    }
    x
}

fn check_hermitian(h: &DMatrix<f64>) -> Result<()> {
    if !h.is_square() {
        return Err(Error::invalid("H", "matrix is not square"));
    }
    let scale = h.amax();
    let asym = (h - h.transpose()).amax();
    if asym > 1e-12 * scale {
        return Err(Error::NotHermitian(if scale > 0.0 { asym / scale } else { asym }));
    }
    if h.iter().any(|v| !v.is_finite()) {
        return Err(Error::EigenFailure);
    }
    Ok(())
}

/// Ascending eigenvalues and matching eigenvector columns.
pub fn eigensystem(h: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    check_hermitian(h)?;
    let sym = (h + h.transpose()) * 0.5;
    let eig = SymmetricEigen::try_new(sym, f64::EPSILON, 0).ok_or(Error::EigenFailure)?;
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = DMatrix::from_columns(&order.iter().map(|&k| eig.eigenvectors.column(k)).collect::<Vec<_>>());
    Ok((values, vectors))
}

/// Ascending real eigenvalues of a Hermitian matrix.
pub fn eigenlevels(h: &DMatrix<f64>) -> Result<Vec<f64>> {
    Ok(eigensystem(h)?.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenSpectrum {
    pub delta_axis: Vec<f64>,
    pub model: CouplingModel,
    pub n_max: usize,
    /// Sorted eigenvalues per detuning.
    pub levels: Vec<Vec<f64>>,
    /// Energies, relative to the ground level, of the lowest states reachable from the
    /// ground state through the cavity field.
    pub transitions: Vec<Vec<f64>>,
    /// Levels continued across detuning by eigenvector overlap: `tracked[i][b]` is the
    /// energy of branch `b` (labelled by its sorted position at the first detuning).
    pub tracked: Vec<Vec<f64>>,
}

/// Number of dipole-connected transitions reported per detuning.
pub const REPORTED_TRANSITIONS: usize = 2;

fn dipole_transitions(values: &[f64], vectors: &DMatrix<f64>, field: &DMatrix<f64>, count: usize) -> Vec<f64> {
    let drive = field * vectors.column(0);
    let scale = drive.norm();
    (1..values.len())
        .filter(|&j| vectors.column(j).dot(&drive).abs() > 1e-6 * scale)
        .take(count)
        .map(|j| values[j] - values[0])
        .collect()
}

fn solve_at(params: &HybridParams, delta: f64, hilbert: TruncatedHilbert, model: CouplingModel) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let f_q = qubit_frequency(delta, params.t_c);
    let g = effective_coupling(params.g0, delta, params.t_c)?;
    eigensystem(&build_hamiltonian(model, params.f_c, f_q, g, hilbert))
}

fn track(prev: &DMatrix<f64>, next: &DMatrix<f64>, prev_perm: &[usize]) -> Vec<usize> {
    // prev_perm[b] = column of `prev` carrying branch b. Greedy assignment by largest
    // overlap, highest overlaps first.
    let dim = prev.ncols();
    let overlaps = prev.transpose() * next;
    let mut pairs: Vec<(f64, usize, usize)> = (0..dim)
        .flat_map(|b| {
            let col = prev_perm[b];
            (0..dim).map(move |j| (col, b, j))
        })
        .map(|(col, b, j)| (overlaps[(col, j)].abs(), b, j))
        .collect();
    pairs.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let mut out = vec![usize::MAX; dim];
    let mut used = vec![false; dim];
    for (_, b, j) in pairs {
        if out[b] == usize::MAX && !used[j] {
            out[b] = j;
            used[j] = true;
        }
    }
    out
}

/// Eigenspectrum along the detuning axis with f_q and g taken from the hybrid model.
pub fn transition_spectrum(
    params: &HybridParams,
    delta_axis: &[f64],
    hilbert: TruncatedHilbert,
    model: CouplingModel,
) -> Result<EigenSpectrum> {
    check_axis("delta_axis", delta_axis)?;
    params.validate()?;
    let solved: Vec<(Vec<f64>, DMatrix<f64>)> = delta_axis
        .par_iter()
        .map(|&d| solve_at(params, d, hilbert, model))
        .collect::<Result<_>>()?;
    let field = field_operator(hilbert);
    let transitions = solved
        .iter()
        .map(|(v, vec)| dipole_transitions(v, vec, &field, REPORTED_TRANSITIONS))
        .collect();

    let dim = hilbert.dim();
    let mut perm: Vec<usize> = (0..dim).collect();
    let mut tracked = Vec::with_capacity(solved.len());
    for (i, (values, vectors)) in solved.iter().enumerate() {
        if i > 0 {
            perm = track(&solved[i - 1].1, vectors, &perm);
        }
        tracked.push(perm.iter().map(|&j| values[j]).collect());
    }
    Ok(EigenSpectrum {
        delta_axis: delta_axis.to_vec(),
        model,
        n_max: hilbert.n_max,
        levels: solved.into_iter().map(|(v, _)| v).collect(),
        transitions,
        tracked,
    })
}

/// Lowest qubit-like transition at δ = 0.
fn lowest_transition(params: &HybridParams, hilbert: TruncatedHilbert, model: CouplingModel) -> Result<f64> {
    let (values, _) = solve_at(params, 0.0, hilbert, model)?;
    Ok(values[1] - values[0])
}

/// Upward shift of the lowest transition at δ = 0 caused by the counter-rotating terms:
/// (full Rabi) − (Jaynes–Cummings).
pub fn bloch_siegert_shift(params: &HybridParams, hilbert: TruncatedHilbert) -> Result<f64> {
    Ok(lowest_transition(params, hilbert, CouplingModel::FullRabi)?
        - lowest_transition(params, hilbert, CouplingModel::JaynesCummings)?)
}

fn tracked_transitions(params: &HybridParams, hilbert: TruncatedHilbert) -> Result<Vec<f64>> {
    let field = field_operator(hilbert);
    let mut deltas = vec![0.0];
    if let Ok(dr) = resonant_detuning(params.f_c, params.t_c) {
        deltas.push(dr);
    }
    let mut out = Vec::new();
    for d in deltas {
        let (v, vec) = solve_at(params, d, hilbert, CouplingModel::FullRabi)?;
        out.push(v[1] - v[0]);
        out.extend(dipole_transitions(&v, &vec, &field, REPORTED_TRANSITIONS));
    }
    Ok(out)
}

/// Smallest cutoff whose tracked full-Rabi transitions (at δ = 0 and δ = δ_r) move by less
/// than `tol` relative when the cutoff grows by two.
pub fn converge_cutoff(params: &HybridParams, tol: f64) -> Result<usize> {
    if !(tol > 0.0) {
        return Err(Error::invalid("tol", "must be > 0"));
    }
    params.validate()?;
    let mut n = 1;
    let mut current = tracked_transitions(params, TruncatedHilbert::new(n)?)?;
    while n + 2 <= MAX_CUTOFF {
        let next = tracked_transitions(params, TruncatedHilbert::new(n + 2)?)?;
        let converged = current.len() == next.len()
            && current
                .iter()
                .zip(&next)
                .all(|(a, b)| (a - b).abs() < tol * b.abs().max(f64::MIN_POSITIVE));
        if converged {
            return Ok(n);
        }
        n += 2;
        current = next;
    }
    Err(Error::CutoffNotConverged(MAX_CUTOFF))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hybrid::presets;
    use crate::reflectance::linspace;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    const FC: f64 = 3.646e9;
    const FQ: f64 = 1.756e9;
    const G0: f64 = 213.7e6;

    fn h(n: usize) -> TruncatedHilbert {
        TruncatedHilbert::new(n).unwrap()
    }

    #[test]
    fn cutoff_must_be_positive() {
        assert!(TruncatedHilbert::new(0).is_err());
        assert_eq!(h(3).dim(), 8);
    }

    #[test]
    fn uncoupled_levels_identical_for_both_models() {
        let mut expected: Vec<f64> = (0..=5).flat_map(|n| [n as f64 * FC - FQ / 2.0, n as f64 * FC + FQ / 2.0]).collect();
        expected.sort_by(f64::total_cmp);
        for m in [CouplingModel::FullRabi, CouplingModel::JaynesCummings] {
            let levels = eigenlevels(&build_hamiltonian(m, FC, FQ, 0.0, h(5))).unwrap();
            for (a, b) in levels.iter().zip(&expected) {
                assert_relative_eq!(a, b, max_relative = 1e-14);
            }
        }
    }

    #[test]
    fn pauli_and_diagonal_examples() {
        let sz = DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, -0.5]);
        assert_eq!(eigenlevels(&sz).unwrap(), vec![-0.5, 0.5]);
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, -1.0, 2.0]));
        assert_eq!(eigenlevels(&d).unwrap(), vec![-1.0, 2.0, 3.0]);
        let bad = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.5, 0.0]);
        assert!(matches!(eigenlevels(&bad), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn jc_manifolds_match_closed_form() {
        let n_max = 8;
        let hm = build_hamiltonian(CouplingModel::JaynesCummings, FC, FQ, G0, h(n_max));
        let levels = eigenlevels(&hm).unwrap();
        let delta = FQ - FC;
        for n in 0..n_max {
            let mid = (n as f64 + 0.5) * FC;
            let half = 0.5 * (delta * delta + 4.0 * G0 * G0 * (n + 1) as f64).sqrt();
            for e in [mid - half, mid + half] {
                let closest = levels.iter().map(|l| (l - e).abs()).fold(f64::INFINITY, f64::min);
                assert!(closest <= 1e-10 * e.abs(), "manifold {n}: {closest}");
            }
        }
    }

    #[test]
    fn jc_is_block_diagonal_and_rabi_has_parity() {
        let hilbert = h(10);
        let jc = build_hamiltonian(CouplingModel::JaynesCummings, FC, FQ, G0, hilbert);
        for i in 0..hilbert.dim() {
            for j in 0..hilbert.dim() {
                let exc = |k: usize| k / 2 + k % 2;
                if exc(i) != exc(j) {
                    assert_eq!(jc[(i, j)], 0.0);
                }
            }
        }
        let full = build_hamiltonian(CouplingModel::FullRabi, FC, FQ, G0, hilbert);
        let p = parity_operator(hilbert);
        assert_eq!((&full * &p - &p * &full).amax(), 0.0);
        assert_eq!((&full - full.transpose()).amax(), 0.0);
    }

    #[test]
    fn counter_rotating_terms_lower_ground_state() {
        let full = eigenlevels(&build_hamiltonian(CouplingModel::FullRabi, FC, FQ, G0, h(10))).unwrap();
        let jc = eigenlevels(&build_hamiltonian(CouplingModel::JaynesCummings, FC, FQ, G0, h(10))).unwrap();
        assert!(full[0] < jc[0]);
    }

    #[test]
    fn bloch_siegert_matches_perturbation_theory() {
        let p = presets::table1_3646();
        let shift = bloch_siegert_shift(&p, h(12)).unwrap();
        let estimate = p.g0 * p.g0 / (2.0 * p.t_c + p.f_c);
        assert!(shift > 0.0);
        assert!((shift / estimate - 1.0).abs() < 0.15, "{shift} vs {estimate}");
        let zero = HybridParams { g0: 0.0, ..p };
        assert_eq!(bloch_siegert_shift(&zero, h(4)).unwrap(), 0.0);
    }

    #[test]
    fn bloch_siegert_is_quadratic_in_coupling() {
        let p = presets::table1_3646();
        let pts: Vec<(f64, f64)> = (0..5)
            .map(|k| {
                let g0 = p.g0 / 2f64.powi(k);
                let s = bloch_siegert_shift(&HybridParams { g0, ..p }, h(12)).unwrap();
                (g0.ln(), s.ln())
            })
            .collect();
        let n = pts.len() as f64;
        let mx = pts.iter().map(|q| q.0).sum::<f64>() / n;
        let my = pts.iter().map(|q| q.1).sum::<f64>() / n;
        let slope = pts.iter().map(|q| (q.0 - mx) * (q.1 - my)).sum::<f64>() / pts.iter().map(|q| (q.0 - mx).powi(2)).sum::<f64>();
        assert!((slope - 2.0).abs() < 0.1, "{slope}");
    }

    #[test]
    fn weak_coupling_bloch_siegert_within_ten_percent() {
        let p = HybridParams { g0: 0.02 * 2.0 * presets::T_C, ..presets::table1_3646() };
        let shift = bloch_siegert_shift(&p, h(8)).unwrap();
        let estimate = p.g0 * p.g0 / (2.0 * p.t_c + p.f_c);
        assert!((shift / estimate - 1.0).abs() < 0.1);
    }

    #[test]
    fn vacuum_rabi_splitting_at_resonance() {
        let p = presets::table1_3646();
        let dr = resonant_detuning(p.f_c, p.t_c).unwrap();
        let g = effective_coupling(p.g0, dr, p.t_c).unwrap();
        let sp = transition_spectrum(&p, &[-dr, dr], h(10), CouplingModel::FullRabi).unwrap();
        for t in &sp.transitions {
            let split = t[1] - t[0];
            assert!((split / (2.0 * g) - 1.0).abs() < 0.05, "{split}");
        }
    }

    #[test]
    fn uncoupled_transitions_cross_cavity_at_resonance() {
        let p = HybridParams { g0: 0.0, ..presets::table1_3646() };
        let dr = resonant_detuning(p.f_c, p.t_c).unwrap();
        let sp = transition_spectrum(&p, &[-dr, 0.0, dr], h(3), CouplingModel::JaynesCummings).unwrap();
        assert_relative_eq!(sp.levels[2][1] - sp.levels[2][0], p.f_c, max_relative = 1e-12);
        assert_relative_eq!(sp.levels[0][2] - sp.levels[0][0], p.f_c, max_relative = 1e-12);
    }

    #[test]
    fn tracking_follows_true_crossings() {
        // Without coupling the |0,e⟩ and |1,g⟩ levels cross at ±δ_r; continuation keeps
        // each branch on a straight qubit or cavity line.
        let p = HybridParams { g0: 0.0, ..presets::table1_3646() };
        let axis = linspace(0.0, 5e9, 41);
        let sp = transition_spectrum(&p, &axis, h(2), CouplingModel::JaynesCummings).unwrap();
        for (i, &d) in axis.iter().enumerate() {
            let f_q = qubit_frequency(d, p.t_c);
            assert_relative_eq!(sp.tracked[i][1] - sp.tracked[i][0], f_q, max_relative = 1e-9);
        }
        for row in &sp.levels {
            assert!(row.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn cutoff_convergence() {
        let zero = HybridParams { g0: 0.0, ..presets::table1_3646() };
        assert_eq!(converge_cutoff(&zero, 1e-12).unwrap(), 1);
        let n = converge_cutoff(&presets::table1_3646(), 1e-8).unwrap();
        assert!((1..=20).contains(&n), "{n}");
        assert!(converge_cutoff(&zero, 0.0).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn jc_closed_form_random(f_c in 2e9..8e9f64, f_q in 0.5e9..8e9f64, g in 0.0..400e6f64) {
            let hm = build_hamiltonian(CouplingModel::JaynesCummings, f_c, f_q, g, h(4));
            let levels = eigenlevels(&hm).unwrap();
            let delta = f_q - f_c;
            for n in 0..4usize {
                let mid = (n as f64 + 0.5) * f_c;
                let half = 0.5 * (delta * delta + 4.0 * g * g * (n + 1) as f64).sqrt();
                for e in [mid - half, mid + half] {
                    let closest = levels.iter().map(|l| (l - e).abs()).fold(f64::INFINITY, f64::min);
                    prop_assert!(closest <= 1e-10 * e.abs().max(f_c));
                }
            }
        }

        #[test]
        fn rabi_commutes_with_parity(f_c in 2e9..8e9f64, f_q in 0.5e9..8e9f64, g in 0.0..1e9f64) {
            let hilbert = h(6);
            let full = build_hamiltonian(CouplingModel::FullRabi, f_c, f_q, g, hilbert);
            let p = parity_operator(hilbert);
            prop_assert_eq!((&full * &p - &p * &full).amax(), 0.0);
        }
    }
}
