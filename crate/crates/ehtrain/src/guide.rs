//! Compiles and runs every code snippet in the book (`book/` at the
//! repository root) as a doc-test, so the guide can never drift from the
//! API. Each chapter becomes one hidden module whose documentation *is*
//! the chapter source.

macro_rules! chapter {
    ($name:ident, $path:literal) => {
        #[doc = include_str!($path)]
        mod $name {}
    };
}

chapter!(introduction, "../../../book/src/introduction.md");
chapter!(energy_model, "../../../book/src/energy-model.md");
chapter!(water_filling, "../../../book/src/water-filling.md");
chapter!(training_throughput, "../../../book/src/training-throughput.md");
chapter!(policies, "../../../book/src/policies.md");
chapter!(experiments, "../../../book/src/experiments.md");
