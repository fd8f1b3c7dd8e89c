//! JSON configuration schema: strict parsing (unknown keys rejected) and
//! conversion into core types.
//!
//! Position-dependent parameters come from a fixed catalog of function forms
//! (`constant`, `linear`, `sinusoidal`, `tabulated`); plain numbers are
//! shorthand for constants.

use serde::{Deserialize, Serialize};

use jumplab_core::coefficients::TransportProfile;
use jumplab_core::kernel::{
    build_detailed_balance, JumpKernel, KernelTable, ProfileFn, RateField, Side, SymmetricBase,
    Table1d, TransitionProfile,
};
use jumplab_core::pde::{BoundaryCondition, PdeForm};
use jumplab_core::walkers::{BinSpec, InitialPosition};
use jumplab_core::{Grid, Interval, LatticeField};

use crate::{CliError, Result};

fn invalid(path: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Validation(format!("{path}: {msg}"))
}

/// Parse a strict JSON document.
pub fn parse_json<T: serde::de::DeserializeOwned>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| CliError::Validation(format!("config: {e}")))
}

// ---------------------------------------------------------------------------
// function catalog

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum FnSpec {
    Constant(ConstantFn),
    Linear(LinearFn),
    Sinusoidal(SinusoidalFn),
    Tabulated(TabulatedFn),
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ConstantFn {
    pub value: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct LinearFn {
    pub intercept: f64,
    pub slope: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SinusoidalFn {
    pub offset: f64,
    pub amplitude: f64,
    #[serde(default = "one")]
    pub frequency: f64,
    #[serde(default)]
    pub phase: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TabulatedFn {
    pub x0: f64,
    pub dx: f64,
    pub values: Vec<f64>,
}

fn one() -> f64 {
    1.0
}

impl FnSpec {
    pub fn build(&self, path: &str) -> Result<ProfileFn> {
        Ok(match self {
            FnSpec::Constant(c) => ProfileFn::Constant(c.value),
            FnSpec::Linear(l) => ProfileFn::Linear {
                intercept: l.intercept,
                slope: l.slope,
            },
            FnSpec::Sinusoidal(s) => ProfileFn::Sinusoidal {
                offset: s.offset,
                amplitude: s.amplitude,
                frequency: s.frequency,
                phase: s.phase,
            },
            FnSpec::Tabulated(t) => ProfileFn::Tabulated(
                Table1d::new(t.x0, t.dx, t.values.clone()).map_err(|e| invalid(path, e))?,
            ),
        })
    }
}

/// A number (constant shorthand) or a catalog function.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum ParamSpec {
    Number(f64),
    Function(FnSpec),
}

impl ParamSpec {
    pub fn build(&self, path: &str) -> Result<ProfileFn> {
        match self {
            ParamSpec::Number(v) => Ok(ProfileFn::Constant(*v)),
            ParamSpec::Function(f) => f.build(path),
        }
    }

    fn constant_positive(&self, path: &str) -> Result<()> {
        if let ParamSpec::Number(v) = self {
            if !(*v > 0.0) {
                return Err(invalid(path, format!("must be > 0, got {v}")));
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// transitions, rates, kernels

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TransitionSpec {
    pub boundary: f64,
    pub width: f64,
    #[serde(default)]
    pub floor: f64,
    pub side: SideSpec,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum SideSpec {
    Lower,
    Upper,
}

impl TransitionSpec {
    pub fn build(&self, path: &str) -> Result<TransitionProfile> {
        let side = match self.side {
            SideSpec::Lower => Side::Lower,
            SideSpec::Upper => Side::Upper,
        };
        TransitionProfile::new(self.boundary, self.width, self.floor, side)
            .map_err(|e| invalid(path, e))
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RateSpec {
    /// Base rate `r₀(x) = 1/τ(x)`; defaults to 1.
    #[serde(default)]
    pub base: Option<ParamSpec>,
    /// Suppression windows multiplying the rate (absorbing walls use floor 0).
    #[serde(default)]
    pub suppression: Vec<TransitionSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum BaseSpec {
    Gaussian(GaussianBase),
    Tophat(TophatBase),
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GaussianBase {
    pub sigma: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TophatBase {
    pub halfwidth: f64,
}

impl BaseSpec {
    fn build(&self, path: &str) -> Result<SymmetricBase> {
        match self {
            BaseSpec::Gaussian(g) => {
                if !(g.sigma > 0.0) {
                    return Err(invalid(path, format!("sigma must be > 0, got {}", g.sigma)));
                }
                Ok(SymmetricBase::Gaussian { sigma: g.sigma })
            }
            BaseSpec::Tophat(t) => {
                if !(t.halfwidth > 0.0) {
                    return Err(invalid(
                        path,
                        format!("halfwidth must be > 0, got {}", t.halfwidth),
                    ));
                }
                Ok(SymmetricBase::TopHat {
                    halfwidth: t.halfwidth,
                })
            }
        }
    }

    fn default_cutoff(&self) -> f64 {
        match self {
            BaseSpec::Gaussian(g) => 6.0 * g.sigma,
            BaseSpec::Tophat(t) => t.halfwidth,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum KernelSpec {
    Gaussian(GaussianKernelSpec),
    Tophat(TophatKernelSpec),
    ShiftedGaussian(ShiftedGaussianKernelSpec),
    DetailedBalance(DetailedBalanceKernelSpec),
    Tabulated(TabulatedKernelSpec),
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GaussianKernelSpec {
    pub sigma: ParamSpec,
    #[serde(default)]
    pub delta_max: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TophatKernelSpec {
    pub halfwidth: ParamSpec,
    #[serde(default)]
    pub delta_max: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ShiftedGaussianKernelSpec {
    pub sigma: ParamSpec,
    pub mean: ParamSpec,
    #[serde(default)]
    pub delta_max: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DetailedBalanceKernelSpec {
    pub base: BaseSpec,
    /// Strictly positive modulation φ(x).
    pub modulation: ParamSpec,
    /// Balance-preserving suppression windows folded into the modulation.
    #[serde(default)]
    pub suppression: Vec<TransitionSpec>,
    #[serde(default)]
    pub delta_max: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TabulatedKernelSpec {
    pub x0: f64,
    pub dx: f64,
    pub nx: usize,
    pub delta0: f64,
    pub ddelta: f64,
    pub ndelta: usize,
    /// Row-major `nx × ndelta` densities.
    pub values: Vec<f64>,
}

impl KernelSpec {
    /// Build the kernel and the matching rate field on `grid`.
    pub fn build(&self, rate: &RateSpec, grid: &Grid, path: &str) -> Result<(JumpKernel, RateField)> {
        let kernel = match self {
            KernelSpec::Gaussian(spec) => {
                spec.sigma.constant_positive(&format!("{path}.sigma"))?;
                let sigma = spec.sigma.build(&format!("{path}.sigma"))?;
                let delta_max = match spec.delta_max {
                    Some(d) => d,
                    None => 6.0 * max_on_grid(&sigma, grid),
                };
                JumpKernel::gaussian(sigma, delta_max).map_err(|e| invalid(path, e))?
            }
            KernelSpec::Tophat(spec) => {
                spec.halfwidth
                    .constant_positive(&format!("{path}.halfwidth"))?;
                let halfwidth = spec.halfwidth.build(&format!("{path}.halfwidth"))?;
                let delta_max = match spec.delta_max {
                    Some(d) => d,
                    None => max_on_grid(&halfwidth, grid),
                };
                JumpKernel::tophat(halfwidth, delta_max).map_err(|e| invalid(path, e))?
            }
            KernelSpec::ShiftedGaussian(spec) => {
                spec.sigma.constant_positive(&format!("{path}.sigma"))?;
                let sigma = spec.sigma.build(&format!("{path}.sigma"))?;
                let mean = spec.mean.build(&format!("{path}.mean"))?;
                let delta_max = match spec.delta_max {
                    Some(d) => d,
                    None => 6.0 * max_on_grid(&sigma, grid) + abs_max_on_grid(&mean, grid),
                };
                JumpKernel::shifted_gaussian(sigma, mean, delta_max)
                    .map_err(|e| invalid(path, e))?
            }
            KernelSpec::DetailedBalance(spec) => {
                let base = spec.base.build(&format!("{path}.base"))?;
                let mut parts = vec![spec.modulation.build(&format!("{path}.modulation"))?];
                for (i, t) in spec.suppression.iter().enumerate() {
                    parts.push(ProfileFn::Transition(
                        t.build(&format!("{path}.suppression[{i}]"))?,
                    ));
                }
                let modulation = if parts.len() == 1 {
                    parts.pop().expect("one part")
                } else {
                    ProfileFn::Product(parts)
                };
                let delta_max = spec.delta_max.unwrap_or_else(|| spec.base.default_cutoff());
                let (kernel, derived_rate) =
                    build_detailed_balance(base, modulation, delta_max, grid)
                        .map_err(|e| invalid(path, e))?;
                if rate.base.is_some() {
                    return Err(invalid(
                        "rate.base",
                        "the detailed_balance family derives its rate from the construction; omit rate.base",
                    ));
                }
                let mut rate_field = derived_rate;
                for (i, t) in rate.suppression.iter().enumerate() {
                    rate_field = rate_field
                        .with_suppression(t.build(&format!("rate.suppression[{i}]"))?);
                }
                return Ok((kernel, rate_field));
            }
            KernelSpec::Tabulated(spec) => {
                let table = KernelTable::new(
                    spec.x0,
                    spec.dx,
                    spec.nx,
                    spec.delta0,
                    spec.ddelta,
                    spec.ndelta,
                    spec.values.clone(),
                )
                .map_err(|e| invalid(path, e))?;
                JumpKernel::tabulated(table).map_err(|e| invalid(path, e))?
            }
        };

        let base = match &rate.base {
            Some(p) => p.build("rate.base")?,
            None => ProfileFn::Constant(1.0),
        };
        let mut rate_field = RateField::from_profile(base);
        for (i, t) in rate.suppression.iter().enumerate() {
            rate_field = rate_field.with_suppression(t.build(&format!("rate.suppression[{i}]"))?);
        }
        // surface negative-rate configurations now rather than mid-run
        for x in grid.centers() {
            rate_field
                .rate(x)
                .map_err(|e| invalid("rate", e))?;
        }
        Ok((kernel, rate_field))
    }
}

fn max_on_grid(f: &ProfileFn, grid: &Grid) -> f64 {
    grid.centers().map(|x| f.eval(x)).fold(0.0, f64::max)
}

fn abs_max_on_grid(f: &ProfileFn, grid: &Grid) -> f64 {
    grid.centers().map(|x| f.eval(x).abs()).fold(0.0, f64::max)
}

// ---------------------------------------------------------------------------
// grids, fields, boundary conditions

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub cells: usize,
}

impl GridSpec {
    pub fn build(&self, path: &str) -> Result<Grid> {
        Grid::new(self.x_min, self.x_max, self.cells).map_err(|e| invalid(path, e))
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct BinsSpec {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl BinsSpec {
    pub fn build(&self, path: &str) -> Result<BinSpec> {
        BinSpec::new(self.lo, self.hi, self.count).map_err(|e| invalid(path, e))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialSpec {
    Point(PointInitial),
    Uniform(UniformInitial),
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PointInitial {
    pub x: f64,
    #[serde(default = "one")]
    pub mass: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct UniformInitial {
    pub lo: f64,
    pub hi: f64,
    #[serde(default = "one")]
    pub mass: f64,
}

impl InitialSpec {
    pub fn build_field(&self, grid: Grid, path: &str) -> Result<LatticeField> {
        match self {
            InitialSpec::Point(p) => {
                LatticeField::point_mass(grid, p.x, p.mass).map_err(|e| invalid(path, e))
            }
            InitialSpec::Uniform(u) => {
                let region = Interval::new(u.lo, u.hi).map_err(|e| invalid(path, e))?;
                LatticeField::uniform_on(grid, region, u.mass).map_err(|e| invalid(path, e))
            }
        }
    }

    pub fn build_walker(&self, path: &str) -> Result<InitialPosition> {
        match self {
            InitialSpec::Point(p) => Ok(InitialPosition::Point(p.x)),
            InitialSpec::Uniform(u) => Ok(InitialPosition::Uniform(
                Interval::new(u.lo, u.hi).map_err(|e| invalid(path, e))?,
            )),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BcSpec {
    Dirichlet(DirichletBc),
    NeumannFlux(NeumannFluxBc),
    NeumannGradient(NeumannGradientBc),
    Robin(RobinBc),
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DirichletBc {
    pub value: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct NeumannFluxBc {
    pub flux: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct NeumannGradientBc {
    pub gradient: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RobinBc {
    pub alpha: f64,
    pub beta: f64,
    pub value: f64,
}

impl BcSpec {
    pub fn build(&self) -> BoundaryCondition {
        match self {
            BcSpec::Dirichlet(b) => BoundaryCondition::Dirichlet { value: b.value },
            BcSpec::NeumannFlux(b) => BoundaryCondition::NeumannFlux { flux: b.flux },
            BcSpec::NeumannGradient(b) => BoundaryCondition::NeumannGradient {
                gradient: b.gradient,
            },
            BcSpec::Robin(b) => BoundaryCondition::Robin {
                alpha: b.alpha,
                beta: b.beta,
                value: b.value,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum FormSpec {
    Fick,
    Fpe,
}

impl FormSpec {
    pub fn build(&self) -> PdeForm {
        match self {
            FormSpec::Fick => PdeForm::Fick,
            FormSpec::Fpe => PdeForm::FokkerPlanck,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum ClosureSpec {
    #[default]
    Conservative,
    Open,
}

impl ClosureSpec {
    pub fn build(&self) -> jumplab_core::master_equation::Closure {
        match self {
            ClosureSpec::Conservative => jumplab_core::master_equation::Closure::Conservative,
            ClosureSpec::Open => jumplab_core::master_equation::Closure::Open,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum TransportSpec {
    /// Reduce the configured kernel/rate pair.
    Kernel(KernelTransport),
    /// Explicit coefficient functions (`d` plus exactly one drift).
    Explicit(ExplicitTransport),
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct KernelTransport {
    /// Force the gradient-form pairing `V = 0` (drop the reduced drift).
    #[serde(default)]
    pub zero_v: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExplicitTransport {
    pub d: ParamSpec,
    #[serde(default)]
    pub v: Option<ParamSpec>,
    #[serde(default)]
    pub vprime: Option<ParamSpec>,
}

impl TransportSpec {
    pub fn build(
        &self,
        grid: Grid,
        kernel_rate: Option<(&JumpKernel, &RateField)>,
        path: &str,
    ) -> Result<TransportProfile> {
        match self {
            TransportSpec::Kernel(spec) => {
                let (kernel, rate) = kernel_rate.ok_or_else(|| {
                    invalid(path, "transport.source = kernel needs a kernel section")
                })?;
                let profile = jumplab_core::coefficients::reduce_to_transport(kernel, rate, &grid)
                    .map_err(|e| invalid(path, e))?;
                Ok(if spec.zero_v {
                    profile.with_zero_v()
                } else {
                    profile
                })
            }
            TransportSpec::Explicit(spec) => {
                let d = spec.d.build(&format!("{path}.d"))?;
                match (&spec.v, &spec.vprime) {
                    (Some(v), None) => {
                        let v = v.build(&format!("{path}.v"))?;
                        TransportProfile::from_fick(grid, |x| d.eval(x), |x| v.eval(x))
                            .map_err(|e| invalid(path, e))
                    }
                    (None, Some(vp)) => {
                        let vp = vp.build(&format!("{path}.vprime"))?;
                        TransportProfile::from_fpe(grid, |x| d.eval(x), |x| vp.eval(x))
                            .map_err(|e| invalid(path, e))
                    }
                    (None, None) => {
                        TransportProfile::from_fick(grid, |x| d.eval(x), |_| 0.0)
                            .map_err(|e| invalid(path, e))
                    }
                    (Some(_), Some(_)) => Err(invalid(
                        path,
                        "give either v or vprime, not both (they are linked by V' = V + dD/dx)",
                    )),
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// per-command documents

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CoeffsDoc {
    pub kernel: KernelSpec,
    #[serde(default)]
    pub rate: RateSpec,
    pub grid: GridSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MeRunDoc {
    pub kernel: KernelSpec,
    #[serde(default)]
    pub rate: RateSpec,
    pub grid: GridSpec,
    #[serde(default)]
    pub closure: ClosureSpec,
    pub initial: InitialSpec,
    pub t_end: f64,
    #[serde(default)]
    pub snapshots: Vec<f64>,
    /// Fraction of the stability bound used per step.
    #[serde(default = "one")]
    pub dt_safety: f64,
    #[serde(default)]
    pub dump_generator: bool,
    /// Interval for the interior/exterior mass ledger (defaults to the grid).
    #[serde(default)]
    pub interior: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct WalkDoc {
    pub kernel: KernelSpec,
    #[serde(default)]
    pub rate: RateSpec,
    /// Grid for table-driven samplers and rate tabulation.
    #[serde(default)]
    pub grid: Option<GridSpec>,
    pub bins: BinsSpec,
    pub initial: InitialSpec,
    pub t_end: f64,
    #[serde(default)]
    pub snapshots: Vec<f64>,
    pub n_walkers: u64,
    pub seed: u64,
    #[serde(default)]
    pub record_jumps: bool,
    /// Estimate per-bin transport coefficients from the jump records.
    #[serde(default)]
    pub km_bins: Option<BinsSpec>,
    /// Write the final ensemble state to this file (relative to --out).
    #[serde(default)]
    pub checkpoint: Option<String>,
    /// Resume from a saved ensemble state instead of fresh initial data.
    #[serde(default)]
    pub resume_from: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PdeRunDoc {
    #[serde(default)]
    pub kernel: Option<KernelSpec>,
    #[serde(default)]
    pub rate: RateSpec,
    pub grid: GridSpec,
    pub transport: TransportSpec,
    pub form: FormSpec,
    pub bc_left: BcSpec,
    pub bc_right: BcSpec,
    pub initial: InitialSpec,
    pub mode: PdeModeSpec,
    #[serde(default = "default_dt_safety")]
    pub dt_safety: f64,
}

fn default_dt_safety() -> f64 {
    0.9
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PdeModeSpec {
    Evolve(EvolveMode),
    Steady(SteadyMode),
    DecayRate(DecayRateMode),
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct EvolveMode {
    pub t_end: f64,
    #[serde(default)]
    pub snapshots: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SteadyMode {
    #[serde(default = "default_steady_tol")]
    pub tol: f64,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
}

fn default_steady_tol() -> f64 {
    1e-9
}

fn default_max_steps() -> usize {
    5_000_000
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DecayRateMode {
    pub window: [f64; 2],
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CompareDoc {
    /// CSV field snapshot, compared against `b` as the reference.
    pub a: String,
    pub b: String,
    pub region: [f64; 2],
    /// Relative-discrepancy threshold for the boundary-layer width.
    #[serde(default = "default_threshold")]
    pub threshold: f64,
}

fn default_threshold() -> f64 {
    0.05
}

// ---------------------------------------------------------------------------
// scenario documents

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "scenario")]
pub enum ScenarioDoc {
    #[serde(rename = "S1_reflecting_smooth")]
    S1(S1Doc),
    #[serde(rename = "S2_absorbing_smooth")]
    S2(S2Doc),
    #[serde(rename = "S3_sharp_interface")]
    S3(S3Doc),
    #[serde(rename = "S4_clt")]
    S4(S4Doc),
    #[serde(rename = "S5_coefficient_sweep")]
    S5(S5Doc),
    #[serde(rename = "custom")]
    Custom(CustomDoc),
}

impl ScenarioDoc {
    pub fn name(&self) -> &'static str {
        match self {
            ScenarioDoc::S1(_) => "S1_reflecting_smooth",
            ScenarioDoc::S2(_) => "S2_absorbing_smooth",
            ScenarioDoc::S3(_) => "S3_sharp_interface",
            ScenarioDoc::S4(_) => "S4_clt",
            ScenarioDoc::S5(_) => "S5_coefficient_sweep",
            ScenarioDoc::Custom(_) => "custom",
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            ScenarioDoc::S1(d) => d.seed,
            ScenarioDoc::S2(d) => d.seed,
            ScenarioDoc::S3(d) => d.seed,
            ScenarioDoc::S4(d) => Some(d.seed),
            ScenarioDoc::S5(d) => Some(d.seed),
            ScenarioDoc::Custom(d) => d.seed,
        }
    }

    pub fn override_seed(&mut self, seed: u64) {
        match self {
            ScenarioDoc::S1(d) => d.seed = Some(seed),
            ScenarioDoc::S2(d) => d.seed = Some(seed),
            ScenarioDoc::S3(d) => d.seed = Some(seed),
            ScenarioDoc::S4(d) => d.seed = seed,
            ScenarioDoc::S5(d) => d.seed = seed,
            ScenarioDoc::Custom(d) => d.seed = Some(seed),
        }
    }
}

/// Reflecting, smooth wall: rate-balanced kernel with the modulation ramped
/// to a small floor outside the unit interval.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct S1Doc {
    pub sigma: f64,
    /// 0 gives the homogeneous preset.
    pub modulation_amplitude: f64,
    /// Rate scale; the default makes τ ≈ 1 inside.
    pub rate_scale: f64,
    /// Transition half-width in units of sigma.
    pub epsilon_factor: f64,
    pub floor: f64,
    pub cells: usize,
    pub t_max: f64,
    pub tol: f64,
    pub seed: Option<u64>,
}

impl Default for S1Doc {
    fn default() -> Self {
        Self {
            sigma: 0.05,
            modulation_amplitude: 0.5,
            rate_scale: 7.978845608028654,
            epsilon_factor: 10.0,
            floor: 1e-6,
            cells: 504,
            t_max: 3000.0,
            tol: 1e-6,
            seed: None,
        }
    }
}

/// Absorbing, smooth-ish wall: symmetric Gaussian kernel, rate ramped to zero
/// outside the unit interval.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct S2Doc {
    pub sigma: f64,
    pub tau: f64,
    /// Transition half-width in units of sigma.
    pub epsilon_factor: f64,
    pub cells: usize,
    pub margin: f64,
    /// Also run at sigma/2 and report the eigenvalue ratio.
    pub check_sigma_scaling: bool,
    pub seed: Option<u64>,
}

impl Default for S2Doc {
    fn default() -> Self {
        Self {
            sigma: 0.02,
            tau: 1.0,
            epsilon_factor: 1.0,
            cells: 512,
            margin: 0.2,
            check_sigma_scaling: true,
            seed: None,
        }
    }
}

/// Sharp interface: the S2 construction with a transition much thinner than
/// the jump length.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct S3Doc {
    pub sigma: f64,
    pub tau: f64,
    pub epsilon_factor: f64,
    /// Lattice cells per kernel sigma; the layer is a few cells wide, so the
    /// resolution must scale with the kernel.
    pub cells_per_sigma: f64,
    pub margin: f64,
    pub threshold: f64,
    /// Also run at 2·sigma and report the layer-width ratio.
    pub check_width_scaling: bool,
    pub seed: Option<u64>,
}

impl Default for S3Doc {
    fn default() -> Self {
        Self {
            sigma: 0.02,
            tau: 1.0,
            epsilon_factor: 0.1,
            cells_per_sigma: 16.0,
            margin: 0.2,
            threshold: 0.05,
            check_width_scaling: true,
            seed: None,
        }
    }
}

/// Central-limit gaussianization of the n-step propagator.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct S4Doc {
    pub halfwidth: f64,
    /// Step counts for the Monte Carlo kurtosis estimate and the decay fit.
    pub n_list: Vec<usize>,
    /// Oracle kurtosis is tabulated for every n up to this.
    pub n_oracle_max: usize,
    pub n_ks: usize,
    pub n_walkers: u64,
    /// Oracle grid nodes per kernel half-width (kurtosis tables).
    pub oracle_nodes: usize,
    /// Oracle grid nodes per half-width for the (cheaper) KS tables.
    pub ks_nodes: usize,
    pub seed: u64,
}

impl Default for S4Doc {
    fn default() -> Self {
        Self {
            halfwidth: 0.3,
            n_list: vec![5, 10, 20, 40],
            n_oracle_max: 40,
            n_ks: 100,
            n_walkers: 400_000,
            oracle_nodes: 800,
            ks_nodes: 80,
            seed: 424242,
        }
    }
}

/// Coefficient sweep: quadrature profiles against walker estimates for the
/// rate-balanced sinusoidal kernel.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct S5Doc {
    pub sigma: f64,
    pub modulation_amplitude: f64,
    pub rate_scale: f64,
    pub cells: usize,
    pub km_bins: usize,
    pub km_lo: f64,
    pub km_hi: f64,
    pub n_walkers: u64,
    pub t_end: f64,
    pub write_jumps: bool,
    pub seed: u64,
}

impl Default for S5Doc {
    fn default() -> Self {
        Self {
            sigma: 0.05,
            modulation_amplitude: 0.5,
            rate_scale: 7.978845608028654,
            cells: 64,
            km_bins: 8,
            km_lo: 0.1,
            km_hi: 0.9,
            n_walkers: 30_000,
            t_end: 30.0,
            write_jumps: false,
            seed: 20240817,
        }
    }
}

/// Fully explicit pipeline: master equation, optional walkers, optional
/// diffusion companion, comparison metrics.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CustomDoc {
    pub kernel: KernelSpec,
    #[serde(default)]
    pub rate: RateSpec,
    pub grid: GridSpec,
    #[serde(default)]
    pub closure: ClosureSpec,
    pub initial: InitialSpec,
    pub t_end: f64,
    #[serde(default)]
    pub snapshots: Vec<f64>,
    #[serde(default = "one")]
    pub dt_safety: f64,
    #[serde(default)]
    pub walkers: Option<CustomWalkers>,
    #[serde(default)]
    pub pde: Option<CustomPde>,
    /// Region for the final master-equation/diffusion comparison.
    #[serde(default)]
    pub compare_region: Option<[f64; 2]>,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CustomWalkers {
    pub n_walkers: u64,
    pub bins: BinsSpec,
    #[serde(default)]
    pub record_jumps: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CustomPde {
    pub transport: TransportSpec,
    pub form: FormSpec,
    pub bc_left: BcSpec,
    pub bc_right: BcSpec,
}
