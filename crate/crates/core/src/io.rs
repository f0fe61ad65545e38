//! ModuleFile JSON format and deterministic run reports.

use crate::elementary::{ElementaryModule, Factor};
use crate::error::{Error, Result};
use crate::finite::FiniteWTModule;
use crate::poly::DistPoly;
use crate::presented::PresentedModule;
use crate::profile::PrecisionProfile;
use crate::series::RingElem;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

/// One factor of an elementary module as it appears on disk.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorFile {
    pub kind: String,
    pub exp: u32,
    /// Exact integer coefficients, low to high ("generic" only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coeffs: Option<Vec<i64>>,
    /// Cyclotomic level ("cyclo" only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level: Option<u32>,
}

/// On-disk module description. `kind` selects which optional fields apply;
/// unknown fields are rejected outright.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModuleFile {
    pub p: u64,
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub free_rank: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub factors: Option<Vec<FactorFile>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rows: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cols: Option<usize>,
    /// Row-major entries, each a low-to-high coefficient list.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entries: Option<Vec<Vec<i64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub orders: Option<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_action: Option<Vec<Vec<u64>>>,
}

fn bad(msg: impl Into<String>) -> Error {
    Error::InvalidModule(msg.into())
}

impl ModuleFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mf: ModuleFile =
            serde_json::from_str(text).map_err(|e| bad(format!("module file: {e}")))?;
        mf.validate()?;
        Ok(mf)
    }

    pub fn serialize(&self) -> String {
        serde_json::to_string_pretty(self).expect("module files always serialize")
    }

    fn validate(&self) -> Result<()> {
        let forbid = |cond: bool, f: &str| {
            if cond {
                Err(bad(format!("field `{f}` not valid for kind `{}`", self.kind)))
            } else {
                Ok(())
            }
        };
        match self.kind.as_str() {
            "elementary" => {
                forbid(self.rows.is_some(), "rows")?;
                forbid(self.cols.is_some(), "cols")?;
                forbid(self.entries.is_some(), "entries")?;
                forbid(self.orders.is_some(), "orders")?;
                forbid(self.t_action.is_some(), "t_action")?;
                let factors = self.factors.as_ref().ok_or_else(|| bad("missing `factors`"))?;
                for (i, f) in factors.iter().enumerate() {
                    match f.kind.as_str() {
                        "p-power" => {
                            if f.coeffs.is_some() || f.level.is_some() {
                                return Err(bad(format!("factor {i}: p-power takes only `exp`")));
                            }
                        }
                        "generic" => {
                            if f.coeffs.is_none() || f.level.is_some() {
                                return Err(bad(format!("factor {i}: generic needs `coeffs` only")));
                            }
                        }
                        "cyclo" => {
                            if f.level.is_none() || f.coeffs.is_some() {
                                return Err(bad(format!("factor {i}: cyclo needs `level` only")));
                            }
                        }
                        other => {
                            return Err(bad(format!("factor {i}: unknown kind `{other}`")));
                        }
                    }
                }
                Ok(())
            }
            "presented" => {
                forbid(self.free_rank.is_some(), "free_rank")?;
                forbid(self.factors.is_some(), "factors")?;
                forbid(self.orders.is_some(), "orders")?;
                forbid(self.t_action.is_some(), "t_action")?;
                let rows = self.rows.ok_or_else(|| bad("missing `rows`"))?;
                let cols = self.cols.ok_or_else(|| bad("missing `cols`"))?;
                let entries = self.entries.as_ref().ok_or_else(|| bad("missing `entries`"))?;
                if entries.len() != rows * cols {
                    return Err(bad("entries length must be rows·cols"));
                }
                Ok(())
            }
            "finite" => {
                forbid(self.free_rank.is_some(), "free_rank")?;
                forbid(self.factors.is_some(), "factors")?;
                forbid(self.rows.is_some(), "rows")?;
                forbid(self.cols.is_some(), "cols")?;
                forbid(self.entries.is_some(), "entries")?;
                let orders = self.orders.as_ref().ok_or_else(|| bad("missing `orders`"))?;
                let t = self.t_action.as_ref().ok_or_else(|| bad("missing `t_action`"))?;
                if t.len() != orders.len() || t.iter().any(|r| r.len() != orders.len()) {
                    return Err(bad("t_action must be square of dimension len(orders)"));
                }
                Ok(())
            }
            other => Err(bad(format!("unknown module kind `{other}`"))),
        }
    }

    pub fn to_elementary(&self, prof: PrecisionProfile) -> Result<ElementaryModule> {
        if self.kind != "elementary" {
            return Err(bad("not an elementary module file"));
        }
        if prof.p != self.p {
            return Err(Error::InvalidProfile(format!(
                "file prime {} vs profile prime {}",
                self.p, prof.p
            )));
        }
        let mut factors = Vec::new();
        for f in self.factors.as_deref().unwrap_or(&[]) {
            factors.push(match f.kind.as_str() {
                "p-power" => Factor::PPower { f: f.exp },
                "generic" => Factor::Generic {
                    g: DistPoly::from_int_coeffs(self.p, f.coeffs.as_ref().unwrap())?,
                    e: f.exp,
                },
                _ => Factor::Cyclo {
                    a: f.level.unwrap(),
                    e: f.exp,
                },
            });
        }
        ElementaryModule::new(prof, self.free_rank.unwrap_or(0), factors)
    }

    pub fn to_presented(&self, prof: PrecisionProfile) -> Result<PresentedModule> {
        if self.kind != "presented" {
            return Err(bad("not a presented module file"));
        }
        if prof.p != self.p {
            return Err(Error::InvalidProfile("file/profile prime mismatch".into()));
        }
        let series = self
            .entries
            .as_ref()
            .unwrap()
            .iter()
            .map(|c| RingElem::from_int_coeffs(prof, c))
            .collect::<Result<Vec<_>>>()?;
        PresentedModule::from_series(prof, self.rows.unwrap(), self.cols.unwrap(), series)
    }

    pub fn to_finite(&self) -> Result<FiniteWTModule> {
        if self.kind != "finite" {
            return Err(bad("not a finite module file"));
        }
        let orders = self.orders.clone().unwrap();
        let t: Vec<u128> = self
            .t_action
            .as_ref()
            .unwrap()
            .iter()
            .flatten()
            .map(|&v| v as u128)
            .collect();
        FiniteWTModule::new(self.p, orders, t)
    }

    pub fn from_elementary(e: &ElementaryModule) -> Result<Self> {
        let mut factors = Vec::new();
        for f in e.factors() {
            factors.push(match f {
                Factor::PPower { f } => FactorFile {
                    kind: "p-power".into(),
                    exp: *f,
                    coeffs: None,
                    level: None,
                },
                Factor::Generic { g, e } => FactorFile {
                    kind: "generic".into(),
                    exp: *e,
                    coeffs: Some(
                        g.coeffs()
                            .iter()
                            .map(|c| {
                                c.to_i64().ok_or_else(|| {
                                    bad("generic coefficient does not fit the file format")
                                })
                            })
                            .collect::<Result<Vec<_>>>()?,
                    ),
                    level: None,
                },
                Factor::Cyclo { a, e } => FactorFile {
                    kind: "cyclo".into(),
                    exp: *e,
                    coeffs: None,
                    level: Some(*a),
                },
            });
        }
        Ok(ModuleFile {
            p: e.profile().p,
            kind: "elementary".into(),
            free_rank: Some(e.free_rank()),
            factors: Some(factors),
            rows: None,
            cols: None,
            entries: None,
            orders: None,
            t_action: None,
        })
    }

    pub fn from_finite(m: &FiniteWTModule) -> Result<Self> {
        let d = m.dim();
        let mut t = Vec::with_capacity(d);
        for i in 0..d {
            let row = (0..d)
                .map(|j| {
                    m.t_action()[i * d + j]
                        .to_u64()
                        .ok_or_else(|| bad("t_action entry does not fit the file format"))
                })
                .collect::<Result<Vec<_>>>()?;
            t.push(row);
        }
        Ok(ModuleFile {
            p: m.p(),
            kind: "finite".into(),
            free_rank: None,
            factors: None,
            rows: None,
            cols: None,
            entries: None,
            orders: Some(m.orders().to_vec()),
            t_action: Some(t),
        })
    }
}

/// Convention notes embedded in every report so numbers are unambiguous.
pub fn convention_notes() -> Vec<String> {
    vec![
        "growth law: e_n = mu*p^(n-1) + lambda*n + nu at level n (deg omega_n = p^(n-1)); \
         renumbering levels so deg omega_n = p^n reads e_n = mu*p^n + lambda*(n+1) + nu"
            .to_string(),
        "nu_0 = T convention: cyclo level 0 denotes the factor Lambda/T^e".to_string(),
    ]
}

#[derive(Debug, Clone, Serialize)]
pub struct ProfileEcho {
    pub p: u64,
    pub prec_p: u32,
    pub prec_t: usize,
    pub n_max: u32,
}

impl From<PrecisionProfile> for ProfileEcho {
    fn from(prof: PrecisionProfile) -> Self {
        ProfileEcho {
            p: prof.p,
            prec_p: prof.m,
            prec_t: prof.d,
            n_max: prof.n_max,
        }
    }
}

/// Deterministic report wrapper: inputs echoed, result payload, notes.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub command: String,
    pub inputs: serde_json::Value,
    pub profile: ProfileEcho,
    pub result: serde_json::Value,
    pub notes: Vec<String>,
}

impl RunReport {
    pub fn new(
        command: &str,
        inputs: serde_json::Value,
        prof: PrecisionProfile,
        result: serde_json::Value,
    ) -> Self {
        RunReport {
            command: command.to_string(),
            inputs,
            profile: prof.into(),
            result,
            notes: convention_notes(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialize")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("command: {}\n", self.command));
        out.push_str(&format!(
            "profile: p={} prec_p={} prec_t={} n_max={}\n",
            self.profile.p, self.profile.prec_p, self.profile.prec_t, self.profile.n_max
        ));
        out.push_str(&format!("inputs: {}\n", self.inputs));
        out.push_str(&format!("result: {}\n", self.result));
        for n in &self.notes {
            out.push_str(&format!("note: {n}\n"));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_examples() {
        let text = r#"{"p":5,"kind":"elementary","free_rank":0,
            "factors":[{"kind":"p-power","exp":2},
                       {"kind":"generic","exp":1,"coeffs":[-5,1]},
                       {"kind":"cyclo","exp":3,"level":1}]}"#;
        let mf = ModuleFile::parse(text).unwrap();
        let again = ModuleFile::parse(&mf.serialize()).unwrap();
        assert_eq!(mf, again);
        let prof = PrecisionProfile::default_p(5).unwrap();
        let e = mf.to_elementary(prof).unwrap();
        assert_eq!(e.invariants().mu, 2);

        let back = ModuleFile::from_elementary(&e).unwrap();
        let e2 = back.to_elementary(prof).unwrap();
        assert!(e.same_class(&e2));
    }

    #[test]
    fn rejects_bad_files() {
        assert!(ModuleFile::parse(r#"{"p":5,"kind":"elementary","factors":[],"zzz":1}"#).is_err());
        assert!(ModuleFile::parse(r#"{"p":5,"kind":"weird"}"#).is_err());
        assert!(ModuleFile::parse(
            r#"{"p":5,"kind":"elementary","factors":[{"kind":"generic","exp":1}]}"#
        )
        .is_err());
        assert!(ModuleFile::parse(
            r#"{"p":5,"kind":"finite","orders":[1],"t_action":[[0],[0]]}"#
        )
        .is_err());
    }

    #[test]
    fn finite_and_presented_files() {
        let mf = ModuleFile::parse(r#"{"p":5,"kind":"finite","orders":[2],"t_action":[[5]]}"#)
            .unwrap();
        let m = mf.to_finite().unwrap();
        assert_eq!(m.orders(), &[2]);
        let back = ModuleFile::from_finite(&m).unwrap();
        assert_eq!(ModuleFile::parse(&back.serialize()).unwrap(), back);

        let mf = ModuleFile::parse(
            r#"{"p":5,"kind":"presented","rows":1,"cols":1,"entries":[[0,1]]}"#,
        )
        .unwrap();
        let prof = PrecisionProfile::default_p(5).unwrap();
        let x = mf.to_presented(prof).unwrap();
        assert_eq!(x.quotient_summary(2).unwrap(), (1, vec![]));
    }
}
