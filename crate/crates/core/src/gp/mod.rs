//! Tree-based genetic programming for symbolic regression.

mod evolve;
mod program;

pub use evolve::{
    choose_operator, crossover, crossover_at, evolve, fitness, full_tree, init_population, mutate,
    tournament_select, Evolution, GP_FORMAT_VERSION, Fitness, GenerationLog, GpModel, GpParams, MutationKind,
    Operator, Tournament,
};
pub use program::{Function, Gene, GpProgram, PROTECTION_THRESHOLD};
