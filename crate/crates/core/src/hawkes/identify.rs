//! Recovery of direct and mediated effects from the observed integrated covariance of
//! the five-process mediation model (see [`super::mediation_model`]).
//!
//! With `O = {A, M, D, L}` observed and `U` latent, `C_OO = R Θ Rᵀ` where
//! `R = (I − G_OO)^{-1}` is unit lower-triangular in the order `L, A, M, D` and `Θ` is
//! diagonal except for `Θ_DL`. Solving entry by entry:
//!
//! * `Θ_AA = C_AA`, `R_MA = C_MA / Θ_AA`, `R_DA = C_DA / Θ_AA`
//! * `Θ_LL = C_LL`, `R_ML = C_LM / Θ_LL`, `Θ_MM = C_MM − R_MA² Θ_AA − R_ML² Θ_LL`
//! * `C_DL = R_DL Θ_LL + Θ_DL`, so `R_DM = (C_DM − R_DA Θ_AA R_MA − R_ML C_DL) / Θ_MM`
//!
//! and inverting `R` over `{A, M, D}` gives `G_MA = R_MA`, `G_DM = R_DM`,
//! `G_DA = R_DA − R_DM R_MA`.

use serde::{Deserialize, Serialize};

use super::{CovMatrix, HawkesError};

/// Names of the observed processes by role.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MediationRoles {
    pub treatment: String,
    pub mediator: String,
    pub outcome: String,
    pub covariate: String,
}

impl Default for MediationRoles {
    fn default() -> Self {
        MediationRoles { treatment: "A".into(), mediator: "M".into(), outcome: "D".into(), covariate: "L".into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdentifyOptions {
    /// Largest asymmetry accepted, relative to the largest entry.
    pub symmetry_tol: f64,
    /// Largest `|C_AL| / sqrt(C_AA C_LL)` accepted; the model forces `C_AL = 0`.
    pub structure_tol: f64,
}

impl Default for IdentifyOptions {
    fn default() -> Self {
        IdentifyOptions { symmetry_tol: 1e-10, structure_tol: 1e-6 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Identified {
    pub g_ma: f64,
    pub g_da: f64,
    pub g_dm: f64,
    pub r_ma: f64,
    pub r_da: f64,
    pub r_dm: f64,
    pub r_ml: f64,
    pub theta_aa: f64,
    pub theta_ll: f64,
    pub theta_mm: f64,
    pub direct: f64,
    pub mediated: f64,
}

pub fn identify(c: &CovMatrix, roles: &MediationRoles, opts: &IdentifyOptions) -> Result<Identified, HawkesError> {
    let names = [&roles.treatment, &roles.mediator, &roles.outcome, &roles.covariate];
    for (k, a) in names.iter().enumerate() {
        if names[..k].contains(a) {
            return Err(HawkesError::RoleCollision);
        }
    }
    let m = &c.matrix;
    let scale = m.amax().max(f64::MIN_POSITIVE);
    let asym = (m - m.transpose()).amax();
    if asym > opts.symmetry_tol * scale {
        return Err(HawkesError::Input(format!("asymmetry {asym:e} exceeds tolerance")));
    }
    let get = |a: &String, b: &String| c.get(a, b);
    let (a, mm, d, l) = (&roles.treatment, &roles.mediator, &roles.outcome, &roles.covariate);
    let positive = |v: f64, what: &str| {
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(HawkesError::Identification(format!("{what} = {v} is not positive")))
        }
    };
    let theta_aa = positive(get(a, a)?, "Θ_AA")?;
    let theta_ll = positive(get(l, l)?, "Θ_LL")?;
    let c_al = get(a, l)?;
    let corr = c_al.abs() / (theta_aa * theta_ll).sqrt();
    if corr > opts.structure_tol {
        return Err(HawkesError::Identification(format!(
            "treatment and covariate are correlated ({corr:e}); the model requires C_AL = 0"
        )));
    }
    let r_ma = get(mm, a)? / theta_aa;
    let r_da = get(d, a)? / theta_aa;
    let r_ml = get(l, mm)? / theta_ll;
    let theta_mm = positive(get(mm, mm)? - r_ma * r_ma * theta_aa - r_ml * r_ml * theta_ll, "Θ_MM")?;
    let r_dm = (get(d, mm)? - r_da * theta_aa * r_ma - r_ml * get(d, l)?) / theta_mm;
    let (g_ma, g_dm) = (r_ma, r_dm);
    let g_da = r_da - r_dm * r_ma;
    Ok(Identified { g_ma, g_da, g_dm, r_ma, r_da, r_dm, r_ml, theta_aa, theta_ll, theta_mm, direct: g_da, mediated: g_dm * g_ma })
}
