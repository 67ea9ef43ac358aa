//! In-process stand-in for the strategy runner: sources are matched by
//! normalized digest against a registry of native closures.

use std::collections::HashMap;
use std::sync::Arc;

use motif_core::cop::Domain;
use motif_core::solvers::{
    baseline_source, native_call, Framework, ImplKind, SlotCall, SlotId, SlotOutput, StrategyError, StrategyExecutor,
    StrategyImpl,
};
use motif_core::Instance;

use crate::harness::source_digest;
use crate::variants::{failing_source, Failure, NativeFn, VARIANTS};

#[derive(Clone, Default)]
pub struct StrategyRegistry {
    entries: HashMap<String, NativeFn>,
}

impl StrategyRegistry {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Baseline transliterations, the variant library, and the failure
    /// sources for every slot.
    pub fn standard() -> Self {
        let mut r = Self::empty();
        for fw in Framework::ALL {
            for d in Domain::ALL.into_iter().filter(|&d| fw.supports(d)) {
                for k in 1..=fw.slot_count() {
                    let slot = SlotId::new(fw, k);
                    let src = baseline_source(slot, d).expect("baseline exists");
                    r.register(src, Arc::new(move |inst: &Instance, call: SlotCall<'_, f64>| native_call(slot, inst, call)));
                    for f in [Failure::Runtime, Failure::NonFinite, Failure::Hang] {
                        r.register(&failing_source(slot, d, f), f.native());
                    }
                }
            }
        }
        for v in VARIANTS {
            r.register(v.source, v.native());
        }
        r
    }

    pub fn register(&mut self, source: &str, f: NativeFn) {
        self.entries.insert(source_digest(source), f);
    }

    pub fn get(&self, source: &str) -> Option<NativeFn> {
        self.entries.get(&source_digest(source)).cloned()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Executes native baselines directly and registered sources through
/// their native twins; anything else fails to "compile".
pub struct InProcessExecutor {
    registry: Arc<StrategyRegistry>,
    bound: HashMap<String, NativeFn>,
}

impl InProcessExecutor {
    pub fn new(registry: Arc<StrategyRegistry>) -> Self {
        Self { registry, bound: HashMap::new() }
    }

    pub fn standard() -> Self {
        Self::new(Arc::new(StrategyRegistry::standard()))
    }

    fn resolve(&mut self, source: &str) -> Result<NativeFn, StrategyError> {
        if let Some(f) = self.bound.get(source) {
            return Ok(f.clone());
        }
        let f = self
            .registry
            .get(source)
            .ok_or_else(|| StrategyError::Compile("source is not registered with the in-process executor".into()))?;
        self.bound.insert(source.to_string(), f.clone());
        Ok(f)
    }
}

impl StrategyExecutor<f64> for InProcessExecutor {
    fn load(&mut self, imp: &StrategyImpl) -> Result<(), StrategyError> {
        match &imp.kind {
            ImplKind::Native => Ok(()),
            ImplKind::External { source } => self.resolve(source).map(|_| ()),
        }
    }

    fn call(&mut self, imp: &StrategyImpl, inst: &Instance, call: SlotCall<'_, f64>) -> Result<SlotOutput<f64>, StrategyError> {
        match &imp.kind {
            ImplKind::Native => native_call(imp.slot, inst, call),
            ImplKind::External { source } => {
                let f = self.resolve(source)?;
                f(inst, call)
            }
        }
    }

    fn begin_candidate(&mut self) {
        self.bound.clear();
    }
}
