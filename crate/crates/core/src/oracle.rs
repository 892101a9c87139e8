//! Exact reference: the master equation of a few explicit atoms on a
//! truncated Fock space, propagated as a dense density matrix.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::{Complex, Complex64};
use rand::Rng;

use crate::cumulant::{CumulantError, Ensemble, MasterEquation, ParamBinding, TWO_PI};
use crate::engine::{EngineError, OdeSystem};
use crate::opalgebra::{OpProduct, OperatorExpr};
use crate::scalar::{cx, cx_from, Coefficient, Real};

/// Summed population of the two highest Fock levels above which a run is
/// considered truncated.
pub const FOCK_TAIL_TOLERANCE: f64 = 1e-8;

#[derive(Debug, thiserror::Error)]
pub enum OracleError {
    #[error(transparent)]
    Cumulant(#[from] CumulantError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("{0}")]
    Unsupported(String),
    #[error("Fock cutoff {cutoff} is too small: population {population:e} in the two top levels")]
    Truncation { cutoff: usize, population: f64 },
}

pub type CMatrix<T> = DMatrix<Complex<T>>;

/// Nonzero entries `(row, col, value)`.
type Sparse<T> = Vec<(usize, usize, Complex<T>)>;

fn sparse<T: Real>(m: &CMatrix<T>) -> Sparse<T> {
    let mut out = Vec::new();
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let v = m[(i, j)];
            if v.re != T::zero() || v.im != T::zero() {
                out.push((i, j, v));
            }
        }
    }
    out
}

/// Product basis `|n> (x) |l_1> (x) ... (x) |l_N>` with the photon number
/// as the slowest index.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Basis {
    pub cutoff: usize,
    pub n_atoms: usize,
    pub levels: u8,
}

impl Basis {
    pub fn new(cutoff: usize, n_atoms: usize, levels: u8) -> Self {
        Basis { cutoff, n_atoms, levels }
    }

    pub fn atom_dim(&self) -> usize {
        (self.levels as usize).pow(self.n_atoms as u32)
    }

    pub fn dim(&self) -> usize {
        self.cutoff * self.atom_dim()
    }

    fn annihilation<T: Real>(&self) -> CMatrix<T> {
        let mut a = CMatrix::zeros(self.cutoff, self.cutoff);
        for n in 1..self.cutoff {
            a[(n - 1, n)] = cx(T::c(n as f64).sqrt(), T::zero());
        }
        a
    }

    /// Matrix of a normal-ordered product.
    pub fn product<T: Real>(&self, p: &OpProduct) -> Result<CMatrix<T>, OracleError> {
        let a = self.annihilation::<T>();
        let ad = a.adjoint();
        let mut boson = CMatrix::identity(self.cutoff, self.cutoff);
        for _ in 0..p.creations() {
            boson *= &ad;
        }
        for _ in 0..p.annihilations() {
            boson *= &a;
        }
        let l = self.levels as usize;
        let mut sites: Vec<CMatrix<T>> = vec![CMatrix::identity(l, l); self.n_atoms];
        for op in p.atoms() {
            let k = op.atom as usize;
            if k == 0 || k > self.n_atoms || op.l > self.levels || op.m > self.levels {
                return Err(OracleError::Unsupported(format!("{p} does not fit {} atoms of {l} levels", self.n_atoms)));
            }
            let mut e = CMatrix::zeros(l, l);
            e[(op.l as usize - 1, op.m as usize - 1)] = cx(T::one(), T::zero());
            sites[k - 1] = &sites[k - 1] * e;
        }
        Ok(sites.iter().fold(boson, |acc, s| acc.kronecker(s)))
    }

    /// Matrix of `expr` with parameters bound in Hz; `angular` applies the
    /// factor `2 pi` once per product after summing.
    pub fn expression<C: Coefficient, T: Real>(
        &self,
        expr: &OperatorExpr<C>,
        binding: &ParamBinding,
        angular: bool,
    ) -> Result<CMatrix<T>, OracleError> {
        let d = self.dim();
        let scale = if angular { TWO_PI } else { 1.0 };
        let mut m = CMatrix::zeros(d, d);
        for (p, v) in bound_terms(expr, binding)? {
            m += self.product::<T>(&p)? * cx_from::<T>(v * scale);
        }
        Ok(m)
    }

    /// Cavity empty and every atom in `level`.
    pub fn product_state<T: Real>(&self, level: u8) -> CMatrix<T> {
        let l = self.levels as usize;
        let idx = (0..self.n_atoms).fold(0, |acc, _| acc * l + (level as usize - 1));
        let mut rho = CMatrix::zeros(self.dim(), self.dim());
        rho[(idx, idx)] = cx(T::one(), T::zero());
        rho
    }

    /// Summed population of the two highest Fock levels.
    pub fn fock_tail<T: Real>(&self, rho: &CMatrix<T>) -> T {
        let a = self.atom_dim();
        let lo = self.cutoff.saturating_sub(2) * a;
        (lo..self.dim()).fold(T::zero(), |s, i| s + rho[(i, i)].re)
    }

    /// Averages `rho` over all permutations of the atoms.
    pub fn symmetrize<T: Real>(&self, rho: &CMatrix<T>) -> CMatrix<T> {
        let perms = permutations(self.n_atoms);
        let l = self.levels as usize;
        let a = self.atom_dim();
        let d = self.dim();
        let digits = |mut x: usize| {
            let mut v = vec![0; self.n_atoms];
            for k in (0..self.n_atoms).rev() {
                v[k] = x % l;
                x /= l;
            }
            v
        };
        let mut out = CMatrix::zeros(d, d);
        for perm in &perms {
            let map: Vec<usize> = (0..d)
                .map(|i| {
                    let (n, s) = (i / a, digits(i % a));
                    n * a + perm.iter().fold(0, |acc, &k| acc * l + s[k])
                })
                .collect();
            for j in 0..d {
                for i in 0..d {
                    out[(map[i], map[j])] += rho[(i, j)];
                }
            }
        }
        out / cx(T::c(perms.len() as f64), T::zero())
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

/// Terms of `expr` grouped by product with coefficients evaluated in Hz.
fn bound_terms<C: Coefficient>(expr: &OperatorExpr<C>, binding: &ParamBinding) -> Result<Vec<(OpProduct, Complex64)>, OracleError> {
    let mut grouped: BTreeMap<OpProduct, Complex64> = BTreeMap::new();
    for t in expr.terms() {
        if !t.phase.is_zero() {
            return Err(OracleError::Unsupported("time-dependent term; move to the static frame first".into()));
        }
        let mut v = t.coefficient.to_complex64();
        for (s, p) in t.params.powers() {
            let x = binding.get(s).ok_or_else(|| CumulantError::UnboundParameter(s.name().to_string()))?;
            v *= x.powi(p as i32);
        }
        *grouped.entry(t.product).or_default() += v;
    }
    Ok(grouped.into_iter().filter(|(_, v)| *v != Complex64::new(0.0, 0.0)).collect())
}

/// `tr(rho o)`.
pub fn expectation<T: Real>(rho: &CMatrix<T>, o: &CMatrix<T>) -> Complex<T> {
    let mut s = Complex::new(T::zero(), T::zero());
    for j in 0..rho.ncols() {
        for i in 0..rho.nrows() {
            s += rho[(i, j)] * o[(j, i)];
        }
    }
    s
}

fn sparse_expectation<T: Real>(rho: &CMatrix<T>, o: &Sparse<T>) -> Complex<T> {
    o.iter().fold(Complex::new(T::zero(), T::zero()), |s, &(j, i, v)| s + rho[(i, j)] * v)
}

/// Random full-rank density matrix `G G^dag / tr`.
pub fn random_state<T: Real>(dim: usize, rng: &mut impl Rng) -> CMatrix<T> {
    let g = CMatrix::from_fn(dim, dim, |_, _| cx(T::c(rng.random_range(-1.0..1.0)), T::c(rng.random_range(-1.0..1.0))));
    let rho = &g * g.adjoint();
    let tr = rho.trace();
    rho / tr
}

/// Random state supported on photon numbers `<= max_photons`.
pub fn random_state_below<T: Real>(basis: &Basis, max_photons: usize, rng: &mut impl Rng) -> CMatrix<T> {
    let d = basis.dim();
    let sub = ((max_photons + 1).min(basis.cutoff)) * basis.atom_dim();
    let small = random_state::<T>(sub, rng);
    let mut rho = CMatrix::zeros(d, d);
    rho.view_mut((0, 0), (sub, sub)).copy_from(&small);
    rho
}

/// Lindblad generator `L(rho) = -i[H, rho] + sum_j D[c_j] rho` in angular
/// units.
#[derive(Clone, Debug)]
pub struct Lindblad<T: Real> {
    basis: Basis,
    hamiltonian: CMatrix<T>,
    /// `H - (i/2) sum_j c_j^dag c_j`.
    effective: Sparse<T>,
    /// `c_j` scaled by the square root of the rate.
    jumps: Vec<Sparse<T>>,
}

impl<T: Real> Lindblad<T> {
    pub fn new<C: Coefficient>(me: &MasterEquation<C>, binding: &ParamBinding, cutoff: usize) -> Result<Self, OracleError> {
        let n = match me.ensemble {
            Ensemble::Explicit(n) => n as usize,
            Ensemble::Symmetric => {
                return Err(OracleError::Unsupported("the ensemble must be expanded to explicit atoms".into()))
            }
        };
        if cutoff < 2 {
            return Err(OracleError::Unsupported("the Fock cutoff must be at least 2".into()));
        }
        let basis = Basis::new(cutoff, n, me.space.levels);
        let hamiltonian: CMatrix<T> = basis.expression(&me.hamiltonian, binding, true)?;
        let mut effective = hamiltonian.clone();
        let mut jumps = Vec::new();
        let half_i = cx(T::zero(), T::c(0.5));
        for d in &me.dissipators {
            let mut rate = 1.0;
            for (s, p) in d.rate.powers() {
                rate *= binding.get(s).ok_or_else(|| CumulantError::UnboundParameter(s.name().to_string()))?.powi(p as i32);
            }
            let c: CMatrix<T> = basis.expression(&d.jump, binding, false)? * cx(T::c((TWO_PI * rate).sqrt()), T::zero());
            effective -= (c.adjoint() * &c) * half_i;
            jumps.push(sparse(&c));
        }
        Ok(Lindblad { basis, hamiltonian, effective: sparse(&effective), jumps })
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn hamiltonian(&self) -> &CMatrix<T> {
        &self.hamiltonian
    }

    pub fn apply(&self, rho: &CMatrix<T>) -> CMatrix<T> {
        let d = self.basis.dim();
        let mut out = CMatrix::zeros(d, d);
        let i = cx(T::zero(), T::one());
        for &(r, k, h) in &self.effective {
            let a = -i * h;
            let b = i * h.conj();
            for l in 0..d {
                out[(r, l)] += a * rho[(k, l)];
                out[(l, r)] += b * rho[(l, k)];
            }
        }
        for c in &self.jumps {
            for &(r, k, u) in c {
                for &(s, l, v) in c {
                    out[(r, s)] += u * rho[(k, l)] * v.conj();
                }
            }
        }
        out
    }

    pub fn unpack(&self, y: &[T]) -> CMatrix<T> {
        let d = self.basis.dim();
        CMatrix::from_fn(d, d, |i, j| {
            let k = 2 * (i + j * d);
            cx(y[k], y[k + 1])
        })
    }

    pub fn pack(&self, rho: &CMatrix<T>) -> Vec<T> {
        rho.iter().flat_map(|z| [z.re, z.im]).collect()
    }
}

impl<T: Real> OdeSystem<T> for Lindblad<T> {
    fn dim(&self) -> usize {
        2 * self.basis.dim() * self.basis.dim()
    }

    fn rhs(&self, _t: T, y: &[T], dy: &mut [T]) {
        let out = self.apply(&self.unpack(y));
        for (k, z) in out.iter().enumerate() {
            dy[2 * k] = z.re;
            dy[2 * k + 1] = z.im;
        }
    }

    fn is_autonomous(&self) -> bool {
        true
    }
}

/// Largest deviation of the symbolic equations `d<o>/dt` of `me` from
/// `tr{L(rho) o}`, each relative to the summed magnitude of its terms.
/// `lindblad` must describe the same physics on explicit atoms; `me` may be
/// symmetric, in which case `rho` should be permutation invariant.
pub fn moment_equation_deviation<C: Coefficient, T: Real>(
    me: &MasterEquation<C>,
    lindblad: &Lindblad<T>,
    binding: &ParamBinding,
    rho: &CMatrix<T>,
    observables: &[OpProduct],
) -> Result<f64, OracleError> {
    let basis = lindblad.basis();
    let lr = lindblad.apply(rho);
    let mut worst = 0.0f64;
    for o in observables {
        let exact = expectation(&lr, &basis.product::<T>(o)?);
        let mut sum = Complex64::new(0.0, 0.0);
        let mut scale = 0.0;
        for (p, v) in bound_terms(&me.derive_moment_eq(o)?, binding)? {
            let e = expectation(rho, &basis.product::<T>(&p)?);
            let term = v * TWO_PI * Complex64::new(e.re.to_f64(), e.im.to_f64());
            sum += term;
            scale += term.norm();
        }
        let diff = (sum - Complex64::new(exact.re.to_f64(), exact.im.to_f64())).norm();
        if scale > 0.0 {
            worst = worst.max(diff / scale);
        } else if diff > 0.0 {
            worst = f64::INFINITY;
        }
    }
    Ok(worst)
}

/// Uniform time grid and Fock cutoff of an exact run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExactConfig {
    pub t_end: f64,
    pub dt: f64,
    pub cutoff: usize,
}

/// Expectation values along an exact trajectory.
#[derive(Clone, Debug)]
pub struct ExactEvolution {
    pub cutoff: usize,
    pub times: Vec<f64>,
    /// `values[k][j]` is `<o_k>` at `times[j]`.
    pub values: Vec<Vec<Complex64>>,
    pub max_fock_tail: f64,
    pub final_state: CMatrix<f64>,
}

impl ExactEvolution {
    /// `Re <o_k>` along the grid.
    pub fn real_part(&self, k: usize) -> Vec<f64> {
        self.values[k].iter().map(|z| z.re).collect()
    }

    /// Quadratic interpolation of `Re <o_k>` at `t`.
    pub fn interpolate(&self, k: usize, t: f64) -> f64 {
        let v = &self.values[k];
        let n = v.len();
        if n < 3 {
            return v.first().map_or(0.0, |z| z.re);
        }
        let dt = self.times[1] - self.times[0];
        let j = ((t / dt).round() as usize).clamp(1, n - 2);
        let s = t / dt - j as f64;
        let (a, b, c) = (v[j - 1].re, v[j].re, v[j + 1].re);
        b + 0.5 * s * (c - a) + 0.5 * s * s * (a - 2.0 * b + c)
    }
}

/// Checks trace, Hermiticity and positivity of a density matrix.
pub fn check_density(rho: &CMatrix<f64>) -> Result<(), OracleError> {
    let tr = rho.trace();
    if (tr - Complex64::new(1.0, 0.0)).norm() > 1e-10 {
        return Err(OracleError::Unsupported(format!("trace {tr} differs from 1")));
    }
    let herm = (rho - rho.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
    if herm > 1e-10 {
        return Err(OracleError::Unsupported(format!("Hermiticity violated by {herm:e}")));
    }
    let h = (rho + rho.adjoint()) * Complex64::new(0.5, 0.0);
    let min = h.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min);
    if min < -1e-8 {
        return Err(OracleError::Unsupported(format!("negative eigenvalue {min:e}")));
    }
    Ok(())
}

/// Propagates `rho0` with the exact one-step propagator `exp(L dt)`.
///
/// When the master equation declares level charges and `rho0` is block
/// diagonal in the total charge (photons plus atomic charges), only those
/// blocks are propagated. If the two top Fock levels hold more than
/// [`FOCK_TAIL_TOLERANCE`], the cutoff is doubled once before giving up.
pub fn evolve_exact<C: Coefficient>(
    me: &MasterEquation<C>,
    binding: &ParamBinding,
    rho0: impl Fn(&Basis) -> CMatrix<f64>,
    observables: &[OpProduct],
    cfg: &ExactConfig,
) -> Result<ExactEvolution, OracleError> {
    match evolve_once(me, binding, &rho0, observables, cfg) {
        Err(OracleError::Truncation { .. }) if 2 * cfg.cutoff <= 16 => {
            log::info!("raising Fock cutoff from {} to {}", cfg.cutoff, 2 * cfg.cutoff);
            evolve_once(me, binding, &rho0, observables, &ExactConfig { cutoff: 2 * cfg.cutoff, ..*cfg })
        }
        r => r,
    }
}

fn charges(basis: &Basis, level_charges: &[i64]) -> Vec<i64> {
    let l = basis.levels as usize;
    let a = basis.atom_dim();
    (0..basis.dim())
        .map(|i| {
            let (n, mut s) = (i / a, i % a);
            let mut q = n as i64;
            for _ in 0..basis.n_atoms {
                q += level_charges[s % l];
                s /= l;
            }
            q
        })
        .collect()
}

fn evolve_once<C: Coefficient>(
    me: &MasterEquation<C>,
    binding: &ParamBinding,
    rho0: &dyn Fn(&Basis) -> CMatrix<f64>,
    observables: &[OpProduct],
    cfg: &ExactConfig,
) -> Result<ExactEvolution, OracleError> {
    if !(cfg.dt > 0.0 && cfg.t_end > 0.0) || cfg.cutoff > 16 {
        return Err(OracleError::Unsupported("need dt > 0, t_end > 0 and a cutoff of at most 16".into()));
    }
    let lind = Lindblad::<f64>::new(me, binding, cfg.cutoff)?;
    let basis = *lind.basis();
    if basis.n_atoms > 3 {
        return Err(OracleError::Unsupported("at most three atoms".into()));
    }
    let d = basis.dim();
    let rho0 = rho0(&basis);
    if rho0.nrows() != d || rho0.ncols() != d {
        return Err(OracleError::Unsupported(format!("initial state is not {d} x {d}")));
    }
    let q = me.level_charges.as_ref().map(|c| charges(&basis, c));
    let blocked = q.as_ref().is_some_and(|q| {
        (0..d).all(|j| (0..d).all(|i| q[i] == q[j] || rho0[(i, j)] == Complex64::new(0.0, 0.0)))
    });
    let pairs: Vec<(usize, usize)> = (0..d)
        .flat_map(|j| (0..d).map(move |i| (i, j)))
        .filter(|&(i, j)| !blocked || q.as_ref().is_some_and(|q| q[i] == q[j]))
        .collect();
    let k = pairs.len();
    let mut gen = CMatrix::<f64>::zeros(k, k);
    let mut e = CMatrix::<f64>::zeros(d, d);
    for (c, &(i, j)) in pairs.iter().enumerate() {
        e[(i, j)] = Complex64::new(1.0, 0.0);
        let out = lind.apply(&e);
        e[(i, j)] = Complex64::new(0.0, 0.0);
        for (r, &(a, b)) in pairs.iter().enumerate() {
            gen[(r, c)] = out[(a, b)];
        }
    }
    let step = (gen * Complex64::new(cfg.dt, 0.0)).exp();
    let ops: Vec<Sparse<f64>> = observables.iter().map(|o| basis.product(o).map(|m| sparse(&m))).collect::<Result<_, _>>()?;
    let mut x = nalgebra::DVector::from_iterator(k, pairs.iter().map(|&(i, j)| rho0[(i, j)]));
    let mut rho = rho0;
    let n_steps = (cfg.t_end / cfg.dt).ceil() as usize;
    let mut times = Vec::with_capacity(n_steps + 1);
    let mut values: Vec<Vec<Complex64>> = vec![Vec::with_capacity(n_steps + 1); ops.len()];
    let mut tail = 0.0f64;
    for s in 0..=n_steps {
        if s > 0 {
            x = &step * &x;
            for (v, &(i, j)) in x.iter().zip(&pairs) {
                rho[(i, j)] = *v;
            }
        }
        tail = tail.max(basis.fock_tail(&rho));
        if tail > FOCK_TAIL_TOLERANCE {
            return Err(OracleError::Truncation { cutoff: cfg.cutoff, population: tail });
        }
        times.push(s as f64 * cfg.dt);
        for (v, o) in values.iter_mut().zip(&ops) {
            v.push(sparse_expectation(&rho, o));
        }
    }
    Ok(ExactEvolution { cutoff: cfg.cutoff, times, values, max_fock_tail: tail, final_state: rho })
}
