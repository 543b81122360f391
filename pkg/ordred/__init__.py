# -*- coding: utf-8 -*-
"""
Supervised dimension reduction for ordered categorical predictors.

The ``ordred`` package fits a latent Gaussian inverse regression model to
ordinal predictors with an EM algorithm and computes the reduction
``R(X) = E(alpha^T Z | X)``. It also provides group-lasso variable selection,
inference on the reduction dimension (permutation test, AIC, BIC and
cross-validation) and a simulation harness with the usual accuracy metrics.
"""

from __future__ import absolute_import

from ._release import __version__
from .model import BasisSpec, OrdinalDataset, ModelParams, ThresholdSet, build_basis, validate_dataset
from .em import fit
from .results import FittedModel
from .reduce import reduce, ses_index
from .regularize import select_lambda
from .dimension import cv_select, ic_select, permutation_select
from .simulate import SimDesign, generate, subspace_angle
