"""Conventional displacement-sensing strategies used as benchmarks."""
from .channels import (GkpIonConfig, HeterodyneConfig, SqueezedConfig, TmsConfig,
                       gkp_ion_sample, heterodyne_sample, make_channel, squeezed_sample,
                       tms_sample)
from .cat import cat_fisher_information, cat_response, fit_sinusoid, train_cat
from .compass import CompassConfig, compass_exact_response, compass_fock_response
from .mlp import MLP, MlpSpec
from .benchmark import MlpTrainConfig, mlp_train_eval, pipeline_accuracy
