"""Binary classifiers for repetition and chunk classification."""
from .base import (
    ALGORITHMS,
    BATCH_ALGORITHMS,
    CLASS_NAMES,
    DEFAULTS,
    Dataset,
    Model,
    TrainConfig,
    encode_labels,
    estimator_from_params,
    hoeffding_update,
    predict,
    train,
)
from .ensemble import AdaBoostM1, RandomForest, tree_rng
from .hoeffding import HoeffdingTree, hoeffding_bound
from .logistic import LogisticRegression, loss_and_grad
from .smo import LinearSMO
from .trees import C45Tree, DecisionStump, FlatTree, RandomTree
