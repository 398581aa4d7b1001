"""Multi-facet counterfactual pair generation and evaluator training."""

from ._mole import (
    NUM_GRADES,
    CheckpointError,
    ContrastivePair,
    CorpusError,
    DivergenceError,
    Document,
    Facet,
    MetricError,
    Model,
    MoleError,
    Provenance,
    UndefinedMetric,
    accuracy,
    assign_facets,
    bin_grade,
    evaluate,
    facet_description,
    generate_mock_pairs,
    kendall_tau,
    load_documents,
    load_model,
    load_pairs,
    macro_f1,
    qwk,
    render_issue_prompt,
    render_rewrite_prompt,
    run_cli,
    save_documents,
    save_pairs,
    self_bleu,
    spearman,
    synthesize,
    train,
    ttr,
)

__all__ = [name for name in dir() if not name.startswith("_")]
