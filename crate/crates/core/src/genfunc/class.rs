use std::collections::HashMap;
use std::sync::RwLock;

use crate::asymptotics::{equal_in_g, test_moderate, test_negligible, Equality, TestSpec, Verdict};
use crate::error::Result;

use super::repr::Representative;

/// `cl[R] ∈ Ĝ(X)` with verdicts cached per test spec.
pub struct GeneralizedFunction {
    pub representative: Representative,
    moderate: RwLock<HashMap<String, Verdict>>,
    negligible: RwLock<HashMap<String, Verdict>>,
}

impl GeneralizedFunction {
    pub fn new(representative: Representative) -> Self {
        Self {
            representative,
            moderate: RwLock::new(HashMap::new()),
            negligible: RwLock::new(HashMap::new()),
        }
    }

    fn cached(
        cache: &RwLock<HashMap<String, Verdict>>,
        spec: &TestSpec,
        run: impl FnOnce() -> Result<Verdict>,
    ) -> Result<Verdict> {
        let key = spec.key();
        if let Some(v) = cache.read().expect("verdict cache poisoned").get(&key) {
            return Ok(v.clone());
        }
        let v = run()?;
        cache.write().expect("verdict cache poisoned").insert(key, v.clone());
        Ok(v)
    }

    pub fn moderate(&self, spec: &TestSpec) -> Result<Verdict> {
        Self::cached(&self.moderate, spec, || test_moderate(&self.representative, spec))
    }

    pub fn negligible(&self, spec: &TestSpec) -> Result<Verdict> {
        Self::cached(&self.negligible, spec, || test_negligible(&self.representative, spec))
    }

    /// Cached verdicts as `(spec key, verdict)` pairs, moderateness first.
    pub fn verdicts(&self) -> Vec<(String, Verdict)> {
        let mut out: Vec<(String, Verdict)> = Vec::new();
        for c in [&self.moderate, &self.negligible] {
            let mut v: Vec<_> = c
                .read()
                .expect("verdict cache poisoned")
                .iter()
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect();
            v.sort_by(|a, b| a.0.cmp(&b.0));
            out.extend(v);
        }
        out
    }

    pub fn equals(&self, other: &GeneralizedFunction, spec: &TestSpec) -> Result<Equality> {
        equal_in_g(&self.representative, &other.representative, spec)
    }
}

impl From<Representative> for GeneralizedFunction {
    fn from(r: Representative) -> Self {
        Self::new(r)
    }
}
