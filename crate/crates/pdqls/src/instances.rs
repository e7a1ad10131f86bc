//! Instance families: Grover-diagonal, PromiseMajority rank-one,
//! expander walks, Feynman–Kitaev sums and random PD matrices.
//!
//! Every generator is a pure function of its parameters and seed, so an
//! instance file can be regenerated from its (family, seed, params) triple.

use std::f64::consts::{E, FRAC_1_SQRT_2};

use rand::seq::{index, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::blockenc::{embed_registers, LocalTerm, SumHamiltonianJson, SumHamiltonianSpec};
use crate::error::{Error, Result};
use crate::linalg::{
    c64, eigendecompose, real, unitarity_residual, vec_norm, CMat, CVec, HermitianOperator, MatrixJson, Spectrum, ONE,
    ZERO,
};
use crate::rng::{haar_unitary, porter_thomas, seeded, substream};
use crate::solver::direct_solution;
use crate::state::{SparseVector, SparseVectorJson, StateVector};

pub const GAP_THRESHOLD: f64 = 0.2;
pub const GAP_RESAMPLES: usize = 100;
pub const PAIRING_ATTEMPTS: usize = 1_000_000;
pub const FK_MAX_QUBITS: usize = 6;
pub const GATE_UNITARY_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub enum InstanceMatrix {
    Dense(HermitianOperator),
    Sum(SumHamiltonianSpec),
}

#[derive(Clone, Debug)]
pub struct QlsInstance {
    pub family: String,
    pub seed: u64,
    pub params: Value,
    pub matrix: InstanceMatrix,
    /// Normalized known-term vector with explicit support.
    pub b: SparseVector,
    /// Declared condition number, never below the true κ(A).
    pub kappa: f64,
    pub meta: Value,
}

/// `{"family", "seed", "params", "matrix" | "spec", "b", "meta"}`; the
/// declared κ travels in `meta.kappa`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InstanceJson {
    pub family: String,
    pub seed: u64,
    pub params: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<MatrixJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec: Option<SumHamiltonianJson>,
    pub b: SparseVectorJson,
    pub meta: Value,
}

impl QlsInstance {
    pub fn dim(&self) -> usize {
        self.b.dim
    }

    pub fn dense_matrix(&self) -> CMat {
        match &self.matrix {
            InstanceMatrix::Dense(h) => h.entries().clone(),
            InstanceMatrix::Sum(s) => s.assemble(),
        }
    }

    /// A as given, with the declared κ attached.
    pub fn operator(&self) -> Result<HermitianOperator> {
        let h = match &self.matrix {
            InstanceMatrix::Dense(h) => h.clone(),
            InstanceMatrix::Sum(s) => HermitianOperator::new(s.assemble())?,
        };
        Ok(h.with_kappa(self.kappa))
    }

    /// A/λ_max(A), whose spectrum lies in [1/κ, 1] as the solvers require.
    pub fn solver_operator(&self) -> Result<HermitianOperator> {
        let a = self.operator()?;
        let lmax = a.lambda_max();
        let s = a.spectrum();
        let scaled = Spectrum {
            values: s.values.iter().map(|v| v / lmax).collect(),
            vectors: s.vectors.clone(),
        };
        Ok(HermitianOperator::from_spectrum(scaled).with_kappa(self.kappa))
    }

    pub fn b_state(&self) -> StateVector {
        StateVector::new(self.b.to_dense())
    }

    pub fn to_json(&self) -> InstanceJson {
        let (matrix, spec) = match &self.matrix {
            InstanceMatrix::Dense(h) => (Some(MatrixJson::from_matrix(h.entries())), None),
            InstanceMatrix::Sum(s) => (None, Some(s.to_json())),
        };
        let mut meta = self.meta.clone();
        meta["kappa"] = json!(self.kappa);
        InstanceJson {
            family: self.family.clone(),
            seed: self.seed,
            params: self.params.clone(),
            matrix,
            spec,
            b: self.b.to_json(),
            meta,
        }
    }

    pub fn from_json(j: &InstanceJson) -> Result<Self> {
        let matrix = match (&j.matrix, &j.spec) {
            (Some(m), None) => InstanceMatrix::Dense(HermitianOperator::new(m.to_matrix()?)?),
            (None, Some(s)) => InstanceMatrix::Sum(SumHamiltonianSpec::from_json(s)?),
            _ => return Err(Error::invalid("instance needs exactly one of \"matrix\" and \"spec\"")),
        };
        let dim = match &matrix {
            InstanceMatrix::Dense(h) => h.dim(),
            InstanceMatrix::Sum(s) => s.dim(),
        };
        let b = SparseVector::from_json(&j.b, dim)?;
        let nb = vec_norm(&b.to_dense());
        if (nb - 1.0).abs() > 1e-10 {
            return Err(Error::invalid(format!("instance b must be normalized, norm = {nb}")));
        }
        let kappa = match j.meta.get("kappa").and_then(Value::as_f64) {
            Some(k) => k,
            None => {
                let h = match &matrix {
                    InstanceMatrix::Dense(h) => h.clone(),
                    InstanceMatrix::Sum(s) => HermitianOperator::new(s.assemble())?,
                };
                h.condition_number()
            }
        };
        Ok(Self {
            family: j.family.clone(),
            seed: j.seed,
            params: j.params.clone(),
            matrix,
            b,
            kappa,
            meta: j.meta.clone(),
        })
    }

    /// Rebuilds the instance from its family, seed and parameters.
    pub fn regenerate(&self) -> Result<Self> {
        generate(&self.family, self.seed, &self.params)
    }
}

fn dense_instance(
    family: &str,
    seed: u64,
    params: Value,
    a: HermitianOperator,
    b: CVec,
    kappa: f64,
    meta: Value,
) -> Result<QlsInstance> {
    let b = StateVector::normalized(b)?;
    Ok(QlsInstance {
        family: family.into(),
        seed,
        params,
        matrix: InstanceMatrix::Dense(a),
        b: SparseVector::from_dense(b.amplitudes()),
        kappa,
        meta,
    })
}

fn to_value<T: Serialize>(p: &T) -> Value {
    serde_json::to_value(p).expect("parameter structs serialize")
}

// ---------------------------------------------------------------- Grover

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GroverParams {
    pub n: usize,
    pub m: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<Vec<usize>>,
}

/// Diagonal A with √((N−M)/N) off S and √(M/N) on S, b = u_N. Without an
/// explicit S a uniformly random M-subset is drawn from the seed.
pub fn grover_diagonal(p: &GroverParams, seed: u64) -> Result<QlsInstance> {
    let (n, m) = (p.n, p.m);
    if m < 1 || 2 * m > n {
        return Err(Error::invalid(format!(
            "grover needs 1 <= M <= N/2, got N = {n}, M = {m}"
        )));
    }
    let mut s = match &p.s {
        Some(s) => {
            let mut seen = vec![false; n];
            for &i in s {
                if i >= n || seen[i] {
                    return Err(Error::invalid(format!("marked set {s:?} repeats or exceeds N = {n}")));
                }
                seen[i] = true;
            }
            if s.len() != m {
                return Err(Error::invalid(format!("marked set has {} elements, M = {m}", s.len())));
            }
            s.clone()
        }
        None => index::sample(&mut seeded(seed), n, m).into_vec(),
    };
    s.sort_unstable();
    let alpha = ((n - m) as f64 / n as f64).sqrt();
    let beta = (m as f64 / n as f64).sqrt();
    let mut d = vec![alpha; n];
    for &i in &s {
        d[i] = beta;
    }
    let kappa = ((n - m) as f64 / m as f64).sqrt();
    let meta = json!({"S": s, "alpha": alpha, "beta": beta, "p_marked": 0.5});
    let params = to_value(&GroverParams { n, m, s: p.s.clone() });
    dense_instance(
        "grover",
        seed,
        params,
        HermitianOperator::from_real_diagonal(&d),
        CVec::from_element(n, real(1.0)),
        kappa,
        meta,
    )
}

// ------------------------------------------------------- PromiseMajority

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MajorityParams {
    pub n: usize,
    pub m: usize,
    pub f: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<Vec<u8>>,
}

/// Bits with (N+M)/2 copies of f and (N−M)/2 of its complement, shuffled.
fn majority_string(n: usize, m: usize, f: u8, seed: u64) -> Vec<u8> {
    let ones = (n + m) / 2;
    let mut y: Vec<u8> = (0..n).map(|i| if i < ones { f } else { 1 - f }).collect();
    y.shuffle(&mut seeded(seed));
    y
}

fn check_majority(n: usize, m: usize, f: u8, y: &Option<Vec<u8>>, seed: u64) -> Result<Vec<u8>> {
    if f > 1 {
        return Err(Error::invalid(format!("f must be 0 or 1, got {f}")));
    }
    if m < 1 || m > n || !(n + m).is_multiple_of(2) {
        return Err(Error::invalid(format!(
            "majority needs 1 <= M <= N with N + M even, got N = {n}, M = {m}"
        )));
    }
    match y {
        None => Ok(majority_string(n, m, f, seed)),
        Some(y) => {
            if y.len() != n || y.iter().any(|&v| v > 1) {
                return Err(Error::invalid("y must hold N bits"));
            }
            let agree = y.iter().filter(|&&v| v == f).count() as i64;
            let margin = 2 * agree - n as i64;
            if margin != m as i64 {
                return Err(Error::invalid(format!(
                    "y has margin {margin} towards f = {f}, the promise needs {m}"
                )));
            }
            Ok(y.clone())
        }
    }
}

fn sign(bit: u8) -> f64 {
    if bit == 0 {
        1.0
    } else {
        -1.0
    }
}

/// (1/√2)|N+1⟩ + (1/√2)·u_N on the first N coordinates.
pub fn plus_reference(n: usize) -> CVec {
    let mut v = CVec::from_element(n + 1, real(FRAC_1_SQRT_2 / (n as f64).sqrt()));
    v[n] = real(FRAC_1_SQRT_2);
    v
}

/// (1 + (−1)^f √(1 + M/N)) / √6.
pub fn majority_overlap(n: usize, m: usize, f: u8) -> f64 {
    (1.0 + sign(f) * (1.0 + m as f64 / n as f64).sqrt()) / 6f64.sqrt()
}

/// A = I − (1−ε)K′ with K′ = (1/N)11ᵀ ⊕ 0 and ε = M/(N+M); b carries the
/// signs (−1)^{y_i} plus the reference entry √(N+M).
pub fn promise_majority_instance(p: &MajorityParams, seed: u64) -> Result<QlsInstance> {
    let (n, m, f) = (p.n, p.m, p.f);
    let y = check_majority(n, m, f, &p.y, seed)?;
    let eps = m as f64 / (n + m) as f64;
    let w = (1.0 - eps) / n as f64;
    let a = CMat::from_fn(n + 1, n + 1, |i, j| {
        let id = if i == j { 1.0 } else { 0.0 };
        if i < n && j < n {
            real(id - w)
        } else {
            real(id)
        }
    });
    let mut b = CVec::from_fn(n + 1, |i, _| if i < n { real(sign(y[i])) } else { ZERO });
    b[n] = real(((n + m) as f64).sqrt());
    let kappa = (n + m) as f64 / m as f64;
    let meta = json!({"y": y, "f": f, "eps": eps, "overlap": majority_overlap(n, m, f)});
    let params = to_value(&MajorityParams {
        n,
        m,
        f,
        y: p.y.clone(),
    });
    dense_instance(
        "promise_majority",
        seed,
        params,
        HermitianOperator::new(a)?,
        b,
        kappa,
        meta,
    )
}

// -------------------------------------------------------------- Expander

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExpanderParams {
    pub n: usize,
    pub d: usize,
    pub m: usize,
    pub f: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c0: Option<f64>,
}

/// Random simple d-regular graph by the pairing model with rejection.
/// Returns the adjacency lists.
pub fn random_regular_graph<R: Rng + ?Sized>(n: usize, d: usize, rng: &mut R) -> Result<Vec<Vec<usize>>> {
    if d >= n || !(n * d).is_multiple_of(2) {
        return Err(Error::invalid(format!("no simple {d}-regular graph on {n} vertices")));
    }
    let mut points: Vec<usize> = (0..n * d).map(|p| p / d).collect();
    let mut adj = vec![false; n * n];
    'attempt: for _ in 0..PAIRING_ATTEMPTS {
        points.shuffle(rng);
        adj.iter_mut().for_each(|a| *a = false);
        for pair in points.chunks_exact(2) {
            let (u, v) = (pair[0], pair[1]);
            if u == v || adj[u * n + v] {
                continue 'attempt;
            }
            adj[u * n + v] = true;
            adj[v * n + u] = true;
        }
        return Ok((0..n).map(|u| (0..n).filter(|&v| adj[u * n + v]).collect()).collect());
    }
    Err(Error::NumericalCheck(format!(
        "pairing model found no simple {d}-regular graph on {n} vertices in {PAIRING_ATTEMPTS} attempts"
    )))
}

/// δ(B) = min over eigenvalues λ ≠ 1 of 1 − |λ|, with the Perron
/// eigenvalue (the largest) excluded once.
pub fn spectral_gap(b: &CMat) -> Result<f64> {
    let s = eigendecompose(b)?;
    let k = s.values.len();
    Ok(s.values[..k - 1]
        .iter()
        .map(|l| 1.0 - l.abs())
        .fold(f64::INFINITY, f64::min))
}

/// Expander instance for a given walk matrix B (symmetric, stochastic).
pub fn expander_from_walk(walk: &CMat, y: &[u8], f: u8, m: usize, c0: Option<f64>) -> Result<(CMat, CVec, Value)> {
    let n = walk.nrows();
    let gap = spectral_gap(walk)?;
    if !(gap > 0.0) {
        return Err(Error::NumericalCheck(format!(
            "walk has no spectral gap (delta = {gap})"
        )));
    }
    let c1 = 1.0 / gap;
    let c0 = c0.unwrap_or(100.0 * c1);
    if !(c0 > 0.0) {
        return Err(Error::invalid(format!("c0 must be positive, got {c0}")));
    }
    let eps = m as f64 / (c0 * n as f64 + m as f64);
    let mut a = CMat::identity(n + 1, n + 1);
    for i in 0..n {
        for j in 0..n {
            a[(i, j)] -= walk[(i, j)] * (1.0 - eps);
        }
    }
    let mut b = CVec::from_fn(n + 1, |i, _| if i < n { real(sign(y[i])) } else { ZERO });
    b[n] = real((n as f64).sqrt() * c0);
    let band = if f == 0 {
        json!({"at_least": 0.92})
    } else {
        json!({"at_most": 0.06})
    };
    let meta = json!({"y": y, "f": f, "gap": gap, "c1": c1, "c0": c0, "eps": eps, "overlap_band": band});
    Ok((a, b, meta))
}

/// A = I − (1−ε)(B ⊕ 0) for B the walk on a random d-regular graph,
/// resampled until δ(B) ≥ 0.2. `d == n` selects the complete graph with
/// self-loops, B = (1/N)11ᵀ.
pub fn expander_instance(p: &ExpanderParams, seed: u64) -> Result<QlsInstance> {
    let (n, d, m, f) = (p.n, p.d, p.m, p.f);
    if d < 3 || d > n || (n * d) % 2 != 0 {
        return Err(Error::invalid(format!(
            "expander needs d >= 3, d <= N and N*d even, got N = {n}, d = {d}"
        )));
    }
    let y = check_majority(n, m, f, &None, seed)?;
    let walk = if d == n {
        CMat::from_element(n, n, real(1.0 / n as f64))
    } else {
        let mut rng = substream(seed, 1);
        let mut found = None;
        for _ in 0..GAP_RESAMPLES {
            let g = random_regular_graph(n, d, &mut rng)?;
            let mut w = CMat::zeros(n, n);
            for (u, nb) in g.iter().enumerate() {
                for &v in nb {
                    w[(u, v)] = real(1.0 / d as f64);
                }
            }
            if spectral_gap(&w)? >= GAP_THRESHOLD {
                found = Some(w);
                break;
            }
        }
        found.ok_or_else(|| {
            Error::NumericalCheck(format!(
                "no {d}-regular graph on {n} vertices reached gap {GAP_THRESHOLD} in {GAP_RESAMPLES} samples"
            ))
        })?
    };
    let (a, b, meta) = expander_from_walk(&walk, &y, f, m, p.c0)?;
    let a = HermitianOperator::new(a)?;
    let kappa = a.condition_number();
    dense_instance("expander", seed, to_value(p), a, b, kappa, meta)
}

// ------------------------------------------------------- Feynman–Kitaev

#[derive(Clone, Debug)]
pub struct Gate {
    pub qubits: Vec<usize>,
    pub matrix: CMat,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GateJson {
    pub qubits: Vec<usize>,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl Gate {
    pub fn to_json(&self) -> GateJson {
        let t = self.matrix.transpose();
        GateJson {
            qubits: self.qubits.clone(),
            re: t.iter().map(|z| z.re).collect(),
            im: t.iter().map(|z| z.im).collect(),
        }
    }

    pub fn from_json(j: &GateJson) -> Result<Self> {
        let side = 1usize << j.qubits.len();
        if j.re.len() != side * side || j.im.len() != side * side {
            return Err(Error::invalid(format!(
                "gate on {:?} needs {side}x{side} entries",
                j.qubits
            )));
        }
        Ok(Self {
            qubits: j.qubits.clone(),
            matrix: CMat::from_fn(side, side, |r, c| c64(j.re[r * side + c], j.im[r * side + c])),
        })
    }
}

pub fn cnot() -> CMat {
    let mut u = CMat::zeros(4, 4);
    u[(0, 0)] = ONE;
    u[(1, 1)] = ONE;
    u[(2, 3)] = ONE;
    u[(3, 2)] = ONE;
    u
}

pub fn hadamard() -> CMat {
    let h = FRAC_1_SQRT_2;
    CMat::from_row_slice(2, 2, &[real(h), real(h), real(h), real(-h)])
}

/// Circuit of one- and two-qubit gates applied to |0^n⟩; qubit 0 is the
/// most significant.
#[derive(Clone, Debug)]
pub struct Circuit {
    pub n: usize,
    pub gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(n: usize, gates: Vec<Gate>) -> Result<Self> {
        if n == 0 || n > FK_MAX_QUBITS {
            return Err(Error::invalid(format!(
                "circuit needs 1 to {FK_MAX_QUBITS} qubits, got {n}"
            )));
        }
        if gates.is_empty() {
            return Err(Error::invalid("circuit needs at least one gate"));
        }
        for (t, g) in gates.iter().enumerate() {
            let q = g.qubits.len();
            let bad_qubits =
                !(1..=2).contains(&q) || g.qubits.iter().any(|&k| k >= n) || (q == 2 && g.qubits[0] == g.qubits[1]);
            if bad_qubits {
                return Err(Error::invalid(format!(
                    "gate {t} acts on {:?} in a {n}-qubit circuit",
                    g.qubits
                )));
            }
            if g.matrix.nrows() != 1 << q || g.matrix.ncols() != 1 << q {
                return Err(Error::invalid(format!("gate {t} must be {0}x{0}", 1 << q)));
            }
            let r = unitarity_residual(&g.matrix);
            if r > GATE_UNITARY_TOL {
                return Err(Error::invalid(format!("gate {t} is not unitary (residual {r:.3e})")));
            }
        }
        Ok(Self { n, gates })
    }

    /// T gates: Haar single-qubit gates, and with probability 0.3 (when
    /// n ≥ 2) a CNOT on a random ordered pair.
    pub fn random<R: Rng + ?Sized>(n: usize, t: usize, rng: &mut R) -> Result<Self> {
        let mut gates = Vec::with_capacity(t);
        for _ in 0..t {
            if n >= 2 && rng.gen_bool(0.3) {
                let pair = index::sample(rng, n, 2);
                gates.push(Gate {
                    qubits: vec![pair.index(0), pair.index(1)],
                    matrix: cnot(),
                });
            } else {
                gates.push(Gate {
                    qubits: vec![rng.gen_range(0..n)],
                    matrix: haar_unitary(rng, 2),
                });
            }
        }
        Self::new(n, gates)
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn gate_matrix(&self, g: &Gate) -> CMat {
        embed_registers(&vec![2; self.n], &g.matrix, &g.qubits)
    }

    /// U_{T−1} ⋯ U_0 |0^n⟩.
    pub fn output(&self) -> CVec {
        let mut v = CVec::zeros(1 << self.n);
        v[0] = ONE;
        for g in &self.gates {
            v = self.gate_matrix(g) * v;
        }
        v
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FkParams {
    pub n: usize,
    /// Gate count of a random circuit drawn from the seed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gates: Option<Vec<GateJson>>,
}

/// The Feynman–Kitaev system A = M†M, M = I − e^{−1/T}U, split into the
/// 3T local terms H_(t), with b = M†e₁ normalized. The clock is register 0
/// (dimension 3T), qubit k of the circuit is register k + 1.
#[derive(Clone, Debug)]
pub struct FeynmanKitaev {
    pub circuit: Circuit,
    pub delta: f64,
    pub spec: SumHamiltonianSpec,
    pub b: SparseVector,
}

/// δ = (1 + e^{−2/T} − 2e^{−1/T}) / (3T).
pub fn fk_delta(t: usize) -> f64 {
    let q = (-1.0 / t as f64).exp();
    (1.0 + q * q - 2.0 * q) / (3 * t) as f64
}

/// 4T²/(1 − e^{−1})².
pub fn fk_kappa_bound(t: usize) -> f64 {
    let c = 1.0 - (-1.0f64).exp();
    4.0 * (t * t) as f64 / (c * c)
}

/// e^{−2}/(1 + e^{−2} + e^{−4}), the weight of the clock window [T, 2T).
pub fn fk_window_probability() -> f64 {
    let a = (-2.0f64).exp();
    a / (1.0 + a + a * a)
}

impl FeynmanKitaev {
    pub fn gate_count(&self) -> usize {
        self.circuit.len()
    }

    pub fn clock_dim(&self) -> usize {
        3 * self.gate_count()
    }

    pub fn system_dim(&self) -> usize {
        1 << self.circuit.n
    }

    pub fn dim(&self) -> usize {
        self.clock_dim() * self.system_dim()
    }

    /// The gate applied on the step t → t+1: U_t for t < T, identity for
    /// T ≤ t < 2T, U_{3T−t−1}† afterwards.
    pub fn step(&self, t: usize) -> Gate {
        let tt = self.gate_count();
        if t < tt {
            self.circuit.gates[t].clone()
        } else if t < 2 * tt {
            Gate {
                qubits: vec![0],
                matrix: CMat::identity(2, 2),
            }
        } else {
            let g = &self.circuit.gates[3 * tt - t - 1];
            Gate {
                qubits: g.qubits.clone(),
                matrix: g.matrix.adjoint(),
            }
        }
    }

    /// U = Σ_t |t+1⟩⟨t| ⊗ U_t with the clock taken modulo 3T.
    pub fn clock_unitary(&self) -> CMat {
        let (c, s) = (self.clock_dim(), self.system_dim());
        let mut u = CMat::zeros(c * s, c * s);
        for t in 0..c {
            let g = self.circuit.gate_matrix(&self.step(t));
            let next = (t + 1) % c;
            u.view_mut((next * s, t * s), (s, s)).copy_from(&g);
        }
        u
    }

    /// M = I − e^{−1/T} U.
    pub fn m_matrix(&self) -> CMat {
        let q = (-1.0 / self.gate_count() as f64).exp();
        let d = self.dim();
        CMat::identity(d, d) - self.clock_unitary().scale(q)
    }

    /// e³/(e³−1) Σ_{t′<3T} e^{−t′/T} U^{t′}, which equals M^{-1}.
    pub fn geometric_inverse(&self) -> CMat {
        let u = self.clock_unitary();
        let tt = self.gate_count() as f64;
        let d = self.dim();
        let mut acc = CMat::zeros(d, d);
        let mut power = CMat::identity(d, d);
        for k in 0..self.clock_dim() {
            acc += power.scale((-(k as f64) / tt).exp());
            power = &u * &power;
        }
        acc.scale(E.powi(3) / (E.powi(3) - 1.0))
    }

    /// For a solution vector over clock ⊗ system: the probability of a
    /// clock reading in [T, 2T) and the fidelity of the conditional system
    /// state with the circuit output.
    pub fn clock_window(&self, x: &CVec) -> (f64, f64) {
        let (tt, s) = (self.gate_count(), self.system_dim());
        let psi = self.circuit.output();
        let total: f64 = x.iter().map(|z| z.norm_sqr()).sum();
        let mut weight = 0.0;
        let mut overlap = 0.0;
        for t in tt..2 * tt {
            let block = x.rows(t * s, s);
            weight += block.iter().map(|z| z.norm_sqr()).sum::<f64>();
            overlap += psi.dotc(&block).norm_sqr();
        }
        (weight / total, overlap / weight)
    }
}

pub fn feynman_kitaev(circuit: Circuit) -> Result<FeynmanKitaev> {
    let tt = circuit.len();
    let c = 3 * tt;
    let q = (-1.0 / tt as f64).exp();
    let delta = fk_delta(tt);
    let mut dims = vec![c];
    dims.extend(std::iter::repeat_n(2, circuit.n));
    let mut fk = FeynmanKitaev {
        circuit,
        delta,
        spec: SumHamiltonianSpec::with_dims(
            vec![c, 2],
            vec![LocalTerm {
                qubits: vec![0],
                matrix: CMat::identity(c, c),
            }],
        )?,
        b: SparseVector {
            dim: 0,
            entries: vec![],
        },
    };
    let mut terms = Vec::with_capacity(c);
    for t in 0..c {
        let g = fk.step(t);
        let gs = g.matrix.nrows();
        let next = (t + 1) % c;
        // h = δI + e^{−1/T}(|t⟩⟨t| + |t+1⟩⟨t+1| − |t+1⟩⟨t| ⊗ u − |t⟩⟨t+1| ⊗ u†)
        let mut h = CMat::identity(c * gs, c * gs).scale(delta);
        for i in 0..gs {
            h[(t * gs + i, t * gs + i)] += real(q);
            h[(next * gs + i, next * gs + i)] += real(q);
            for j in 0..gs {
                h[(next * gs + i, t * gs + j)] -= g.matrix[(i, j)] * q;
                h[(t * gs + i, next * gs + j)] -= g.matrix[(j, i)].conj() * q;
            }
        }
        let mut regs = vec![0];
        regs.extend(g.qubits.iter().map(|k| k + 1));
        terms.push(LocalTerm {
            qubits: regs,
            matrix: h,
        });
    }
    fk.spec = SumHamiltonianSpec::with_dims(dims, terms)?;
    // M†e₁ = e₁ − e^{−1/T}|3T−1⟩ ⊗ U_0|0^n⟩
    let s = fk.system_dim();
    let mut zero = CVec::zeros(s);
    zero[0] = ONE;
    let u0 = fk.circuit.gate_matrix(&fk.circuit.gates[0]) * zero;
    let mut b = CVec::zeros(c * s);
    b[0] = ONE;
    for i in 0..s {
        b[(c - 1) * s + i] -= u0[i] * q;
    }
    let nb = vec_norm(&b);
    fk.b = SparseVector::from_dense(&b.unscale(nb));
    Ok(fk)
}

/// Feynman–Kitaev instance from explicit gates or a random circuit.
pub fn feynman_kitaev_sumqls(p: &FkParams, seed: u64) -> Result<(QlsInstance, FeynmanKitaev)> {
    let circuit = match (&p.gates, p.t) {
        (Some(g), None) => Circuit::new(p.n, g.iter().map(Gate::from_json).collect::<Result<_>>()?)?,
        (None, Some(t)) => Circuit::random(p.n, t, &mut seeded(seed))?,
        _ => {
            return Err(Error::invalid(
                "feynman_kitaev needs exactly one of \"t\" and \"gates\"",
            ))
        }
    };
    let fk = feynman_kitaev(circuit)?;
    let tt = fk.gate_count();
    let out = fk.circuit.output();
    let meta = json!({
        "T": tt,
        "delta": fk.delta,
        "J": fk.clock_dim(),
        "d_b": fk.b.sparsity(),
        "kappa_bound": fk_kappa_bound(tt),
        "gamma_inv_bound": 5.01 * (tt * tt) as f64,
        "window_probability": fk_window_probability(),
        "circuit": fk.circuit.gates.iter().map(Gate::to_json).collect::<Vec<_>>(),
        "output": MatrixJson::from_vector(&out),
    });
    let inst = QlsInstance {
        family: "feynman_kitaev".into(),
        seed,
        params: to_value(p),
        matrix: InstanceMatrix::Sum(fk.spec.clone()),
        b: fk.b.clone(),
        kappa: fk_kappa_bound(tt),
        meta,
    };
    Ok((inst, fk))
}

// ------------------------------------------------------------ Random PD

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BModel {
    #[default]
    PorterThomas,
    /// The eigenvector whose eigenvalue is closest to the given value.
    FixedEigvec(f64),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RandomPdParams {
    pub n: usize,
    pub kappa: f64,
    #[serde(default)]
    pub b_model: BModel,
}

/// Eigenvalues and the coefficients of b in the eigenbasis. These alone
/// fix ‖A^{-1}b‖, so large-N statistics need not build the basis.
#[derive(Clone, Debug)]
pub struct RandomPdSpectral {
    pub values: Vec<f64>,
    pub coeffs: CVec,
}

impl RandomPdSpectral {
    pub fn inverse_norm(&self) -> f64 {
        self.values
            .iter()
            .zip(self.coeffs.iter())
            .map(|(l, c)| c.norm_sqr() / (l * l))
            .sum::<f64>()
            .sqrt()
    }
}

pub fn random_pd_spectral(p: &RandomPdParams, seed: u64) -> Result<RandomPdSpectral> {
    let (n, kappa) = (p.n, p.kappa);
    if n < 2 || !(kappa > 1.0) || !kappa.is_finite() {
        return Err(Error::invalid(format!(
            "random_pd needs N >= 2 and kappa > 1, got N = {n}, kappa = {kappa}"
        )));
    }
    let mut rng = substream(seed, 0);
    let lo = 1.0 / kappa;
    let mut values: Vec<f64> = (0..n).map(|_| rng.gen_range(lo..=1.0)).collect();
    values[0] = lo;
    values[1] = 1.0;
    values.sort_by(f64::total_cmp);
    let coeffs = match p.b_model {
        BModel::PorterThomas => porter_thomas(&mut substream(seed, 1), n),
        BModel::FixedEigvec(target) => {
            let k = (0..n)
                .min_by(|&i, &j| (values[i] - target).abs().total_cmp(&(values[j] - target).abs()))
                .expect("n >= 2");
            let mut c = CVec::zeros(n);
            c[k] = ONE;
            c
        }
    };
    Ok(RandomPdSpectral { values, coeffs })
}

/// Eigenvalues uniform on [1/κ, 1] with both ends pinned, Haar eigenbasis.
pub fn random_pd_instance(p: &RandomPdParams, seed: u64) -> Result<QlsInstance> {
    let sp = random_pd_spectral(p, seed)?;
    let v = haar_unitary(&mut substream(seed, 2), p.n);
    let b = &v * &sp.coeffs;
    let a = HermitianOperator::from_spectrum(Spectrum {
        values: sp.values.clone(),
        vectors: v,
    });
    let meta = json!({"b_model": p.b_model, "inverse_norm": sp.inverse_norm()});
    dense_instance("random_pd", seed, to_value(p), a, b, p.kappa, meta)
}

// ------------------------------------------------------ random Sum-QLS

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SumSpecParams {
    pub n: usize,
    pub j: usize,
    pub s: usize,
    /// Non-zeros of b.
    pub d_b: usize,
}

/// J terms on random s-qubit subsets, each V diag(λ) V† with Haar V and λ
/// uniform on [0.1, 1].
pub fn random_sum_spec<R: Rng + ?Sized>(n: usize, j: usize, s: usize, rng: &mut R) -> Result<SumHamiltonianSpec> {
    if s == 0 || s > n || j == 0 {
        return Err(Error::invalid(format!(
            "sum spec needs 1 <= s <= n and J >= 1, got n = {n}, J = {j}, s = {s}"
        )));
    }
    let d = 1usize << s;
    let mut terms = Vec::with_capacity(j);
    for _ in 0..j {
        let mut regs = index::sample(rng, n, s).into_vec();
        regs.sort_unstable();
        let v = haar_unitary(rng, d);
        let lam: Vec<f64> = (0..d).map(|_| rng.gen_range(0.1..=1.0)).collect();
        let mut h = &v * CMat::from_diagonal(&CVec::from_iterator(d, lam.iter().map(|&l| real(l)))) * v.adjoint();
        // exact Hermitian symmetry
        h = (&h + h.adjoint()).scale(0.5);
        terms.push(LocalTerm {
            qubits: regs,
            matrix: h,
        });
    }
    SumHamiltonianSpec::new(n, terms)
}

/// Normalized b with `d_b` complex Gaussian entries at random positions.
pub fn random_sparse_b<R: Rng + ?Sized>(dim: usize, d_b: usize, rng: &mut R) -> Result<SparseVector> {
    if d_b == 0 || d_b > dim {
        return Err(Error::invalid(format!("need 1 <= d_b <= {dim}, got {d_b}")));
    }
    let mut pos = index::sample(rng, dim, d_b).into_vec();
    pos.sort_unstable();
    let vals: Vec<_> = (0..d_b).map(|_| crate::rng::complex_gaussian(rng)).collect();
    let norm = vals.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    Ok(SparseVector {
        dim,
        entries: pos.into_iter().zip(vals).map(|(p, z)| (p, z / norm)).collect(),
    })
}

pub fn random_sum_instance(p: &SumSpecParams, seed: u64) -> Result<QlsInstance> {
    let mut rng = seeded(seed);
    let spec = random_sum_spec(p.n, p.j, p.s, &mut rng)?;
    let b = random_sparse_b(spec.dim(), p.d_b, &mut rng)?;
    let a = HermitianOperator::new(spec.assemble())?;
    let kappa = a.condition_number();
    Ok(QlsInstance {
        family: "random_sum".into(),
        seed,
        params: to_value(p),
        matrix: InstanceMatrix::Sum(spec),
        b,
        kappa,
        meta: json!({}),
    })
}

// ------------------------------------------------------------- dispatch

pub const FAMILIES: [&str; 6] = [
    "grover",
    "promise_majority",
    "expander",
    "feynman_kitaev",
    "random_pd",
    "random_sum",
];

pub fn generate(family: &str, seed: u64, params: &Value) -> Result<QlsInstance> {
    fn parse<T: for<'de> Deserialize<'de>>(v: &Value) -> Result<T> {
        serde_json::from_value(v.clone()).map_err(|e| Error::invalid(format!("instance parameters: {e}")))
    }
    match family {
        "grover" => grover_diagonal(&parse(params)?, seed),
        "promise_majority" => promise_majority_instance(&parse(params)?, seed),
        "expander" => expander_instance(&parse(params)?, seed),
        "feynman_kitaev" => Ok(feynman_kitaev_sumqls(&parse(params)?, seed)?.0),
        "random_pd" => random_pd_instance(&parse(params)?, seed),
        "random_sum" => random_sum_instance(&parse(params)?, seed),
        other => Err(Error::invalid(format!(
            "unknown family {other:?}; expected one of {FAMILIES:?}"
        ))),
    }
}

// ---------------------------------------------------------- observables

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    Equal,
    AtLeast,
    AtMost,
}

#[derive(Clone, Debug, Serialize)]
pub struct Observable {
    pub name: String,
    pub relation: Relation,
    pub expected: f64,
    pub measured: f64,
    pub tol: f64,
}

impl Observable {
    fn new(name: &str, relation: Relation, expected: f64, measured: f64, tol: f64) -> Self {
        Self {
            name: name.into(),
            relation,
            expected,
            measured,
            tol,
        }
    }

    pub fn holds(&self) -> bool {
        match self.relation {
            Relation::Equal => (self.measured - self.expected).abs() <= self.tol,
            Relation::AtLeast => self.measured >= self.expected - self.tol,
            Relation::AtMost => self.measured <= self.expected + self.tol,
        }
    }
}

/// Recomputes the recorded observables of an instance from (A, b) by a
/// dense solve.
pub fn check_observables(inst: &QlsInstance) -> Result<Vec<Observable>> {
    use Relation::*;
    let a = inst.operator()?;
    let b = inst.b_state();
    let x = StateVector::normalized(direct_solution(&a, &b))?;
    let mut out = vec![
        Observable::new("lambda_min", AtLeast, 0.0, a.lambda_min(), 0.0),
        Observable::new(
            "kappa_declared",
            AtMost,
            inst.kappa,
            a.condition_number(),
            1e-9 * inst.kappa,
        ),
    ];
    let meta = &inst.meta;
    let f64_of = |k: &str| meta.get(k).and_then(Value::as_f64).unwrap_or(f64::NAN);
    match inst.family.as_str() {
        "grover" => {
            let s: Vec<usize> = serde_json::from_value(meta["S"].clone())?;
            let p: f64 = s.iter().map(|&i| x.probability(i)).sum();
            out.push(Observable::new("p_marked", Equal, 0.5, p, 1e-10));
        }
        "promise_majority" | "expander" => {
            let n = inst.dim() - 1;
            let ov = StateVector::new(plus_reference(n)).inner(&x).re;
            if inst.family == "promise_majority" {
                out.push(Observable::new("overlap", Equal, f64_of("overlap"), ov, 1e-10));
            } else if let Some(lo) = meta["overlap_band"].get("at_least").and_then(Value::as_f64) {
                out.push(Observable::new("overlap", AtLeast, lo, ov.abs(), 0.0));
            } else {
                let hi = meta["overlap_band"]["at_most"].as_f64().unwrap_or(f64::NAN);
                out.push(Observable::new("overlap", AtMost, hi, ov.abs(), 0.02));
            }
        }
        "feynman_kitaev" => {
            let p: FkParams = serde_json::from_value(inst.params.clone())?;
            let (_, fk) = feynman_kitaev_sumqls(&p, inst.seed)?;
            let (pw, fid) = fk.clock_window(x.amplitudes());
            out.push(Observable::new("window_probability", AtLeast, 0.11, pw, 0.0));
            out.push(Observable::new("window_fidelity", AtLeast, 1.0, fid, 1e-8));
        }
        "random_pd" => {
            let norm = vec_norm(&direct_solution(&a, &b));
            out.push(Observable::new(
                "inverse_norm",
                Equal,
                f64_of("inverse_norm"),
                norm,
                1e-8 * norm,
            ));
        }
        _ => {}
    }
    Ok(out)
}
