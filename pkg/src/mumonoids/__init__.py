"""A small algebra for iterative collection programs.

Programs are trees of flatmap, join, cogroup, reductions, and a
fixpoint loop over bags. The package parses a surface syntax for them,
typechecks them, evaluates them, rewrites loops so they compute less,
and simulates how much data each execution plan would move between
partitions.
"""

from .aggregates import DISTINCT, IDENTITY, Aggregator, reduce_by_key_agg
from .benchmarks import BENCHMARKS, Benchmark, get_benchmark
from .distsim import (
    ByKeyHash,
    CostCogroup,
    CostDistinct,
    CostFixpoint,
    CostGroupBy,
    CostJoin,
    CostLeaf,
    Explicit,
    PartitionedBag,
    RoundRobin,
    TransferReport,
    account_join_shapes,
    explicit_partitions,
    format_report,
    partition,
    run_plan_p1,
    run_plan_p2,
    run_plan_p2_repartitioned,
)
from .errors import (
    BuiltinError,
    CardinalityLimitError,
    DataError,
    IncompatibleTypesError,
    InternalSoundnessError,
    IterationLimitError,
    MalformedTermError,
    MumonoidsError,
    ParseError,
    PlanError,
    ProbeError,
    TypeCheckError,
)
from .expr import (
    Apply,
    Cogroup,
    Construct,
    Dist,
    Expr,
    Fixpoint,
    Flatmap,
    Join,
    Lambda,
    Let,
    Lit,
    Prim,
    Program,
    Reduce,
    ReduceByKey,
    Singleton,
    Var,
    format_expr,
    format_program,
    free_vars,
    inline_lets,
)
from .generators import (
    gen_dag,
    gen_erdos_renyi,
    gen_flights,
    gen_int_set,
    read_table,
    write_table,
)
from .interp import EvalLimits, FixpointTrace, Runner, evaluate, run_program
from .optimizer import (
    OptimizeResult,
    PlanDirective,
    RewriteStep,
    find_repartition_key,
    format_trace,
    is_syntactic_homomorphism,
    optimize,
    select_plan,
)
from .parser import parse_expr, parse_program
from .typecheck import typecheck, typecheck_program
from .values import Bag, Value, bag_union, distinct, format_value

__version__ = "0.1.0"

__all__ = [
    "Aggregator",
    "DISTINCT",
    "IDENTITY",
    "reduce_by_key_agg",
    "BENCHMARKS",
    "Benchmark",
    "get_benchmark",
    "ByKeyHash",
    "CostCogroup",
    "CostDistinct",
    "CostFixpoint",
    "CostGroupBy",
    "CostJoin",
    "CostLeaf",
    "Explicit",
    "PartitionedBag",
    "RoundRobin",
    "TransferReport",
    "account_join_shapes",
    "explicit_partitions",
    "format_report",
    "partition",
    "run_plan_p1",
    "run_plan_p2",
    "run_plan_p2_repartitioned",
    "BuiltinError",
    "CardinalityLimitError",
    "DataError",
    "IncompatibleTypesError",
    "InternalSoundnessError",
    "IterationLimitError",
    "MalformedTermError",
    "MumonoidsError",
    "ParseError",
    "PlanError",
    "ProbeError",
    "TypeCheckError",
    "Apply",
    "Cogroup",
    "Construct",
    "Dist",
    "Expr",
    "Fixpoint",
    "Flatmap",
    "Join",
    "Lambda",
    "Let",
    "Lit",
    "Prim",
    "Program",
    "Reduce",
    "ReduceByKey",
    "Singleton",
    "Var",
    "format_expr",
    "format_program",
    "free_vars",
    "inline_lets",
    "gen_dag",
    "gen_erdos_renyi",
    "gen_flights",
    "gen_int_set",
    "read_table",
    "write_table",
    "EvalLimits",
    "FixpointTrace",
    "Runner",
    "evaluate",
    "run_program",
    "OptimizeResult",
    "PlanDirective",
    "RewriteStep",
    "find_repartition_key",
    "format_trace",
    "is_syntactic_homomorphism",
    "optimize",
    "select_plan",
    "parse_expr",
    "parse_program",
    "typecheck",
    "typecheck_program",
    "Bag",
    "Value",
    "bag_union",
    "distinct",
    "format_value",
    "__version__",
]
