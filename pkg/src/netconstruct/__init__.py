"""Executable weight constructions for shallow, residual, fully connected and DenseNet networks over R and C."""

from .errors import CancellationWarning, ConstructionError, FieldMismatchError, ShapeError
from .kernels import BACKEND
from .numerics import (
    Activation,
    BoxGrid,
    FieldTag,
    MPoly,
    activation_coefficient,
    eval_activation,
    eval_mpoly,
    iterated_difference,
    laplacian_fd,
    sup_norm_diff,
    symbolic_laplacian,
)
from .shallow import (
    ShallowNet,
    build_monomial_1d,
    build_monomial_multi,
    build_monomial_via_higher,
    build_polynomial,
    eval_shallow,
    truncate_to_polynomial,
)
from .deep import (
    MLP,
    DenseNet,
    ResNet,
    densenet_from_mlp,
    densenet_from_shallow,
    eval_densenet,
    eval_mlp,
    eval_resnet,
    mlp_from_shallow,
    param_count,
    resnet_from_shallow,
    resnet_poly_general,
    resnet_poly_square,
)

__version__ = "0.1.0"

__all__ = [
    "Activation", "BACKEND", "BoxGrid", "CancellationWarning", "ConstructionError", "DenseNet",
    "FieldMismatchError", "FieldTag", "MLP", "MPoly", "ResNet", "ShallowNet", "ShapeError",
    "activation_coefficient", "build_monomial_1d", "build_monomial_multi", "build_monomial_via_higher",
    "build_polynomial", "densenet_from_mlp", "densenet_from_shallow", "eval_activation", "eval_densenet",
    "eval_mlp", "eval_mpoly", "eval_resnet", "eval_shallow", "iterated_difference", "laplacian_fd",
    "mlp_from_shallow", "param_count", "resnet_from_shallow", "resnet_poly_general", "resnet_poly_square",
    "sup_norm_diff", "symbolic_laplacian", "truncate_to_polynomial",
]
