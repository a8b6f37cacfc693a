"""MuTo: a multilingual topic model that jointly learns topics and a
vocabulary matching between two languages via stochastic EM.

The package splits into corpora (`muto.corpus`), matching priors
(`muto.priors`), the matching step (`muto.matching`), collapsed Gibbs
sampling and the EM driver (`muto.sampler`), evaluation (`muto.eval`),
and the command line (`muto.cli`).
"""

from .corpus import (
    Corpus,
    Document,
    GroundTruth,
    Language,
    Vocabulary,
    build_vocabulary,
    generate_synthetic_corpus,
    load_corpus,
    load_gold_pairs,
    planted_matching,
    save_corpus,
    save_gold_pairs,
)
from .errors import ConfigError, FormatError, MutoError
from .eval import (
    EvalReport,
    TopicTable,
    TranslationAccuracy,
    document_match_score,
    evaluate,
    export_topics,
    hellinger,
    language_purity,
    translation_accuracy,
)
from .matching import (
    Matching,
    SizeSchedule,
    WeightMatrix,
    brute_force_matching,
    candidate_edges,
    compute_weights,
    edge_weight,
    initial_matching,
    max_weight_matching,
    prior_only_weights,
    schedule_size,
)
from .priors import (
    Lexicon,
    PriorMatrix,
    dictionary_prior,
    edit_distance_prior,
    levenshtein,
    load_lexicon,
    load_prior,
    pmi_prior,
    save_prior,
    uniform_prior,
)
from .sampler import (
    EMConfig,
    Hyperparams,
    SamplerSnapshot,
    SamplerState,
    TrainedModel,
    conditional_distribution,
    estimate_beta,
    estimate_rho,
    estimate_theta,
    gibbs_sweep,
    init_state,
    load_model,
    rematch,
    run_lda,
    run_muto,
    save_model,
)

__version__ = "0.1.0"
