from .core import (Algorithm, CentroidSet, Chunk, ClusterResult, ClusteringError, DataError, DegenerateGammaError,
                   InvalidConfigError, MembershipMatrix, MultiViewDataset, NumericalError, RunConfig, ViewWeights,
                   partition_into_chunks, zscore_normalize)
from .pipelines import (CentroidPool, Initialization, assign_labels, cluster, run_iminimax, run_naive_mv, run_ofcm,
                        run_spfcm)
