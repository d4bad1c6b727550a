from .layers import BiasAdd, Conv2d, Conv3d, Relu, Sigmoid, SpatialSoftmax, Upsample2d
from .net import NetSpec, ParamSet, ShapeError, backward, forward, init_params
from .adam import NonFiniteGradient, adam_step
from .gradcheck import grad_check, numeric_grad
from .tensorio import TensorFormatError, load_named_tensors, load_tensor, save_named_tensors, save_tensor

__all__ = [
    "BiasAdd", "Conv2d", "Conv3d", "Relu", "Sigmoid", "SpatialSoftmax", "Upsample2d",
    "NetSpec", "ParamSet", "ShapeError", "backward", "forward", "init_params",
    "NonFiniteGradient", "adam_step", "grad_check", "numeric_grad",
    "TensorFormatError", "load_named_tensors", "load_tensor", "save_named_tensors", "save_tensor",
]
