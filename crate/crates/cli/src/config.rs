//! Run configuration: the JSON schema, validation, and resolution into the
//! objects the commands drive.

use std::path::{Path, PathBuf};

use charkin_core::charfn::{make_state_charfn, StateSpec};
use charkin_core::classical::ClassicalHamiltonian;
use charkin_core::evolution::{
    build_rhs, EomRhs, MonitorTolerances, RhsMethod, DEFAULT_LATTICE_ACCURACY,
};
use charkin_core::hamiltonian::{
    ham_distributional, lattice_sampled, DistHam, HamCharRep, HamTerm, PolyHamiltonian, SymbolKind,
};
use charkin_core::kernels::KernelKind;
use charkin_core::poly::PhasePoly;
use charkin_core::{CharField, GridSpec, Ordering, PhaseGrid, C64};
use serde::{Deserialize, Serialize};

use crate::failure::Failure;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    fn expand(&self, n: usize, name: &str) -> Result<Vec<T>, Failure> {
        match self {
            OneOrMany::One(v) => Ok(vec![v.clone(); n]),
            OneOrMany::Many(v) if v.len() == n => Ok(v.clone()),
            OneOrMany::Many(v) => Err(Failure::config(format!(
                "{name} has {} entries, expected grid.N = {n}",
                v.len()
            ))),
        }
    }
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "G")]
    pub g: OneOrMany<usize>,
    #[serde(rename = "L_lambda")]
    pub l_lambda: OneOrMany<f64>,
    #[serde(rename = "L_mu")]
    pub l_mu: OneOrMany<f64>,
    #[serde(default = "one")]
    pub hbar: f64,
    #[serde(default = "one")]
    pub omega: f64,
}

/// One monomial `coeff · Π x_i^{powers_i} Π p_i^{powers_{N+i}}` of a
/// classical symbol.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymbolTerm {
    pub powers: Vec<u32>,
    pub coeff: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum HamiltonianBlock {
    /// Normal-ordered terms `coeff · â†^creation â^annihilation`.
    Terms {
        terms: Vec<HamTerm>,
    },
    Zero,
    Harmonic,
    Kerr {
        chi: f64,
    },
    Quartic {
        g: f64,
    },
    /// A classical phase-space symbol in `(x…, p…)`.
    Classical {
        terms: Vec<SymbolTerm>,
    },
    ClassicalHarmonic,
}

fn default_ordering() -> Ordering {
    Ordering::Symmetric
}
fn default_method() -> RhsMethod {
    RhsMethod::Distributional
}
fn default_dt() -> f64 {
    1e-2
}
fn default_cadence() -> usize {
    1
}
fn default_accuracy() -> usize {
    DEFAULT_LATTICE_ACCURACY
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveBlock {
    #[serde(default = "default_ordering")]
    pub ordering: Ordering,
    #[serde(default = "default_method")]
    pub method: RhsMethod,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default)]
    pub t_final: f64,
    #[serde(default = "default_cadence")]
    pub cadence: usize,
    /// Stencil accuracy of the lattice Hamiltonian on grid-sampled paths.
    #[serde(default = "default_accuracy")]
    pub accuracy: usize,
    #[serde(default)]
    pub tolerances: MonitorTolerances,
}

impl Default for EvolveBlock {
    fn default() -> Self {
        EvolveBlock {
            ordering: default_ordering(),
            method: default_method(),
            dt: default_dt(),
            t_final: 0.0,
            cadence: default_cadence(),
            accuracy: default_accuracy(),
            tolerances: MonitorTolerances::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Bin,
    Csv,
}

fn default_formats() -> Vec<Format> {
    vec![Format::Bin]
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    #[serde(default)]
    pub dir: Option<PathBuf>,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
}

impl Default for OutputBlock {
    fn default() -> Self {
        OutputBlock {
            dir: None,
            formats: default_formats(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleReference {
    FiniteDifference,
    Commutator,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MethodTolerances {
    pub distributional: f64,
    pub quadrature: f64,
    pub star_product: f64,
}

impl MethodTolerances {
    pub fn get(&self, m: RhsMethod) -> f64 {
        match m {
            RhsMethod::Distributional => self.distributional,
            RhsMethod::Quadrature => self.quadrature,
            RhsMethod::StarProduct => self.star_product,
        }
    }
}

impl Default for MethodTolerances {
    fn default() -> Self {
        MethodTolerances {
            distributional: 1e-4,
            quadrature: 1e-2,
            star_product: 1e-2,
        }
    }
}

fn default_n_max() -> usize {
    20
}
fn default_tau() -> f64 {
    1e-4
}
fn default_reference() -> OracleReference {
    OracleReference::FiniteDifference
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleBlock {
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    #[serde(default = "default_tau")]
    pub tau: f64,
    #[serde(default = "default_reference")]
    pub reference: OracleReference,
    /// Methods to check; empty means the evolve block's method.
    #[serde(default)]
    pub methods: Vec<RhsMethod>,
    #[serde(default)]
    pub tolerances: MethodTolerances,
}

impl Default for OracleBlock {
    fn default() -> Self {
        OracleBlock {
            n_max: default_n_max(),
            tau: default_tau(),
            reference: default_reference(),
            methods: Vec::new(),
            tolerances: MethodTolerances::default(),
        }
    }
}

fn default_hbars() -> Vec<f64> {
    vec![0.4, 0.2, 0.1]
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanBlock {
    #[serde(default = "default_hbars")]
    pub hbars: Vec<f64>,
}

impl Default for ScanBlock {
    fn default() -> Self {
        ScanBlock {
            hbars: default_hbars(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridBlock,
    pub state: StateSpec,
    pub hamiltonian: HamiltonianBlock,
    #[serde(default)]
    pub evolve: EvolveBlock,
    #[serde(default)]
    pub output: OutputBlock,
    #[serde(default)]
    pub oracle: OracleBlock,
    #[serde(default)]
    pub scan: ScanBlock,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::config(format!("cannot read config {}: {e}", path.display())))?;
        RunConfig::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, Failure> {
        let cfg: RunConfig =
            serde_json::from_str(text).map_err(|e| Failure::config(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn grid_spec(&self) -> Result<GridSpec, Failure> {
        let g = &self.grid;
        if g.n == 0 {
            return Err(Failure::config("grid.N must be positive"));
        }
        let points = g.g.expand(g.n, "grid.G")?;
        if points.iter().any(|&p| p % 2 != 0) {
            return Err(Failure::config("grid.G must be even"));
        }
        if points.iter().any(|&p| p < 4) {
            return Err(Failure::config("grid.G must be at least 4"));
        }
        let extent_lambda = g.l_lambda.expand(g.n, "grid.L_lambda")?;
        let extent_mu = g.l_mu.expand(g.n, "grid.L_mu")?;
        if extent_lambda
            .iter()
            .chain(&extent_mu)
            .any(|&l| !(l.is_finite() && l > 0.0))
        {
            return Err(Failure::config("grid extents must be positive"));
        }
        if !(g.hbar.is_finite() && g.hbar > 0.0) {
            return Err(Failure::config("grid.hbar must be positive"));
        }
        if !(g.omega.is_finite() && g.omega > 0.0) {
            return Err(Failure::config("grid.omega must be positive"));
        }
        Ok(GridSpec {
            dims: g.n,
            points,
            extent_lambda,
            extent_mu,
            hbar: g.hbar,
            omega: g.omega,
        })
    }

    /// Cross-field checks that need no numerical work.
    pub fn validate(&self) -> Result<(), Failure> {
        let spec = self.grid_spec()?;
        self.state.validate().map_err(Failure::from)?;
        let e = &self.evolve;
        if !(e.dt.is_finite() && e.dt >= 0.0) {
            return Err(Failure::config("evolve.dt must be finite and non-negative"));
        }
        if !(e.t_final.is_finite() && e.t_final >= 0.0) {
            return Err(Failure::config(
                "evolve.t_final must be finite and non-negative",
            ));
        }
        if e.cadence == 0 {
            return Err(Failure::config("evolve.cadence must be positive"));
        }
        if e.accuracy == 0 || !e.accuracy.is_multiple_of(2) {
            return Err(Failure::config(
                "evolve.accuracy must be a positive even number",
            ));
        }
        if e.method == RhsMethod::StarProduct && e.ordering != Ordering::Normal {
            return Err(Failure::config(
                "evolve.method star_product requires evolve.ordering normal",
            ));
        }
        let classical_symbol = matches!(
            self.hamiltonian,
            HamiltonianBlock::Classical { .. } | HamiltonianBlock::ClassicalHarmonic
        );
        if classical_symbol && !matches!(e.ordering, Ordering::Classical | Ordering::Symmetric) {
            return Err(Failure::config(
                "a classical symbol needs evolve.ordering classical or symmetric",
            ));
        }
        if let HamiltonianBlock::Classical { terms } = &self.hamiltonian {
            if let Some(t) = terms.iter().find(|t| t.powers.len() != 2 * spec.dims) {
                return Err(Failure::config(format!(
                    "hamiltonian term powers {:?} need 2·grid.N = {} entries",
                    t.powers,
                    2 * spec.dims
                )));
            }
        }
        if matches!(
            self.hamiltonian,
            HamiltonianBlock::Kerr { .. } | HamiltonianBlock::Quartic { .. }
        ) && spec.dims != 1
        {
            return Err(Failure::config(
                "kerr and quartic presets are single-mode (grid.N = 1)",
            ));
        }
        if self.oracle.n_max < 2 {
            return Err(Failure::config("oracle.n_max must be at least 2"));
        }
        if !(self.oracle.tau.is_finite() && self.oracle.tau > 0.0) {
            return Err(Failure::config("oracle.tau must be positive"));
        }
        Ok(())
    }

    /// The quantum Hamiltonian, if the block describes one.
    pub fn quantum_hamiltonian(&self) -> Result<Option<PolyHamiltonian>, Failure> {
        let g = &self.grid;
        let h = match &self.hamiltonian {
            HamiltonianBlock::Terms { terms } => PolyHamiltonian::from_terms(g.n, terms)?,
            HamiltonianBlock::Zero => PolyHamiltonian::zero(g.n),
            HamiltonianBlock::Harmonic => PolyHamiltonian::harmonic(g.n, g.hbar, g.omega),
            HamiltonianBlock::Kerr { chi } => PolyHamiltonian::kerr(*chi),
            HamiltonianBlock::Quartic { g: coupling } => {
                PolyHamiltonian::quartic(g.hbar, g.omega, *coupling)
            }
            HamiltonianBlock::Classical { .. } | HamiltonianBlock::ClassicalHarmonic => {
                return Ok(None)
            }
        };
        if h.modes() != g.n {
            return Err(Failure::config(format!(
                "hamiltonian acts on {} modes, grid.N is {}",
                h.modes(),
                g.n
            )));
        }
        h.ensure_hermitian()?;
        Ok(Some(h))
    }

    /// Phase-space symbol in `(x…, p…)`: the Weyl symbol of a quantum
    /// Hamiltonian at the configured `ħ`, or the classical symbol as given.
    pub fn phase_symbol(&self) -> Result<PhasePoly, Failure> {
        let g = &self.grid;
        match &self.hamiltonian {
            HamiltonianBlock::Classical { terms } => Ok(PhasePoly::from_terms(
                2 * g.n,
                terms
                    .iter()
                    .map(|t| (t.powers.clone(), C64::new(t.coeff, 0.0))),
            )),
            HamiltonianBlock::ClassicalHarmonic => Ok(ClassicalHamiltonian::harmonic(g.n, g.omega)
                .symbol()
                .clone()),
            _ => {
                let h = self.quantum_hamiltonian()?.expect("quantum block");
                Ok(h.symbol(SymbolKind::Weyl, g.hbar, g.omega))
            }
        }
    }

    /// Distributional Hamiltonian in the evolve block's ordering.
    pub fn distributional(&self, ordering: Ordering) -> Result<DistHam, Failure> {
        let g = &self.grid;
        if let Some(h) = self.quantum_hamiltonian()? {
            if ordering.is_quantum() {
                return Ok(ham_distributional(&h, ordering, g.hbar, g.omega)?);
            }
        }
        let symbol = self.phase_symbol()?;
        if ordering == Ordering::Classical {
            Ok(ClassicalHamiltonian::new(symbol.pruned(1e-14))?.distributional()?)
        } else {
            Ok(DistHam::from_symbol(&symbol, ordering)?)
        }
    }
}

/// A configuration resolved into grid, evaluator and initial field.
pub struct Setup {
    pub rhs: Box<dyn EomRhs>,
    pub initial: CharField,
    pub truncation_warning: bool,
}

impl Setup {
    pub fn build(cfg: &RunConfig) -> Result<Self, Failure> {
        Setup::with_method(cfg, cfg.evolve.method)
    }

    pub fn with_method(cfg: &RunConfig, method: RhsMethod) -> Result<Self, Failure> {
        let grid = PhaseGrid::new(&cfg.grid_spec()?)?;
        let ordering = cfg.evolve.ordering;
        let rhs = build_method(cfg, &grid, ordering, method)?;
        let (initial, truncation_warning) = initial_field(cfg, &grid, ordering)?;
        Ok(Setup {
            rhs,
            initial,
            truncation_warning,
        })
    }
}

pub fn build_method(
    cfg: &RunConfig,
    grid: &PhaseGrid,
    ordering: Ordering,
    method: RhsMethod,
) -> Result<Box<dyn EomRhs>, Failure> {
    if method == RhsMethod::StarProduct && ordering != Ordering::Normal {
        return Err(Failure::config(
            "the star_product method requires normal ordering",
        ));
    }
    let dist = cfg.distributional(ordering)?;
    let rep = match method {
        RhsMethod::Distributional => HamCharRep::Distributional(dist),
        _ => HamCharRep::GridSampled(lattice_sampled(&dist, grid, cfg.evolve.accuracy)?),
    };
    Ok(build_rhs(method, &rep, grid, KernelKind::from(ordering))?)
}

/// The configured state in `ordering`; a classical run starts from the
/// symmetric (Wigner) characteristic function.
pub fn initial_field(
    cfg: &RunConfig,
    grid: &PhaseGrid,
    ordering: Ordering,
) -> Result<(CharField, bool), Failure> {
    let sample = if ordering.is_quantum() {
        ordering
    } else {
        Ordering::Symmetric
    };
    let s = make_state_charfn(&cfg.state, grid, sample)?;
    Ok((s.field.retagged(ordering), s.truncation_warning))
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"{
        "grid": {"N": 1, "G": 16, "L_lambda": 6.0, "L_mu": 6.0},
        "state": {"kind": "coherent", "alpha": [0.5, 0.0]},
        "hamiltonian": {"kind": "harmonic"}
    }"#;

    fn with(edit: impl FnOnce(&mut serde_json::Value)) -> Result<RunConfig, Failure> {
        let mut v: serde_json::Value = serde_json::from_str(BASE).unwrap();
        edit(&mut v);
        RunConfig::parse(&v.to_string())
    }

    #[test]
    fn defaults_fill_in() {
        let c = RunConfig::parse(BASE).unwrap();
        assert_eq!(c.evolve.ordering, Ordering::Symmetric);
        assert_eq!(c.evolve.method, RhsMethod::Distributional);
        assert_eq!(c.output.formats, vec![Format::Bin]);
        assert_eq!(c.scan.hbars, vec![0.4, 0.2, 0.1]);
        let spec = c.grid_spec().unwrap();
        assert_eq!(spec, GridSpec::uniform(1, 16, 6.0, 1.0, 1.0));
    }

    #[test]
    fn odd_grid_rejected() {
        let e = with(|v| v["grid"]["G"] = 15.into()).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        assert_eq!(e.message, "grid.G must be even");
    }

    #[test]
    fn cross_validation() {
        let e = with(|v| v["evolve"] = serde_json::json!({"method": "star_product"})).unwrap_err();
        assert!(e.message.contains("normal"), "{}", e.message);
        let e = with(|v| {
            v["hamiltonian"] = serde_json::json!({"kind": "classical_harmonic"});
            v["evolve"] = serde_json::json!({"ordering": "normal"});
        })
        .unwrap_err();
        assert!(e.message.contains("classical symbol"));
        let e = with(|v| v["grid"]["G"] = serde_json::json!([16, 16])).unwrap_err();
        assert!(e.message.contains("grid.G has 2 entries"));
        let e = with(|v| v["unknown"] = 1.into()).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        let e = with(|v| v["evolve"] = serde_json::json!({"cadence": 0})).unwrap_err();
        assert!(e.message.contains("cadence"));
    }

    #[test]
    fn term_list_and_modes() {
        let c = with(|v| {
            v["hamiltonian"] = serde_json::json!({"kind": "terms", "terms": [
                {"creation": [1], "annihilation": [1], "coeff": [1.0, 0.0]},
                {"creation": [0], "annihilation": [0], "coeff": [0.5, 0.0]}
            ]})
        })
        .unwrap();
        let h = c.quantum_hamiltonian().unwrap().unwrap();
        assert_eq!(h, PolyHamiltonian::harmonic(1, 1.0, 1.0));
        let bad = with(|v| {
            v["hamiltonian"] = serde_json::json!({"kind": "terms", "terms": [
                {"creation": [1], "annihilation": [0], "coeff": [1.0, 0.0]}
            ]})
        })
        .unwrap();
        assert_eq!(bad.quantum_hamiltonian().unwrap_err().exit_code(), 2);
    }

    #[test]
    fn classical_run_of_quantum_hamiltonian_uses_weyl_symbol() {
        let c = with(|v| v["evolve"] = serde_json::json!({"ordering": "classical"})).unwrap();
        let s = Setup::build(&c).unwrap();
        assert_eq!(s.initial.ordering(), Ordering::Classical);
        let q = Setup::build(&RunConfig::parse(BASE).unwrap()).unwrap();
        let rq = q.rhs.eval(&q.initial).unwrap();
        let rc = s.rhs.eval(&s.initial).unwrap();
        assert!(rq.max_abs_diff(&rc) < 1e-12);
    }
}
