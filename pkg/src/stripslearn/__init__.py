"""Learning propositional STRIPS action models from labeled action traces.

The package spans the whole pipeline: the trace-consistency oracle over
STRIPS domains (`core`), benchmark domain builders (`domains`), a Boolean
attention-program interpreter and the domain compiler targeting it
(`brasp`), the differentiable hard-attention classifier with its exact
parameterization, binarization and model extraction (`xformer`), focal-loss
training with hand-derived gradients and rectified Adam (`train`), trace
sampling and dataset assembly (`datagen`), file formats (`formats`) and the
command-line interface with the experiment harness (`cli`).
"""

from .core import (Action, Domain, State, Trace, TraceVerdict, WriterTable,
                   apply, classify_trace, possible_next, validate_domain)
from .domains import (BUILTIN_NAMES, TRAIN_MAX_LEN, GroundingSpec,
                      builtin_domain, builtin_simple, make_blocksworld,
                      make_ferry)
from .brasp import (BraspProgram, brasp_classify, compile_domain, eval_program,
                    program_to_text, record_to_text)
from .xformer import (ForwardRecord, binarize, boolean_forward, extract_model,
                      forward, invented_atom_names, stick_breaking, theta_star)
from .datagen import (Dataset, DatasetConfig, SamplingError, build_dataset,
                      enumerate_traces, sample_negative, sample_positive,
                      traces_equivalent)
from .train import (EvalStats, LossConfig, OptState, TrainConfig, TrainResult,
                    batch_loss, dataset_accuracy, evaluate, grad, radam_step,
                    trace_loss, train)

__version__ = "0.1.0"
