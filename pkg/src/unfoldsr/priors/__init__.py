from .resunet import ResUNetPrior, resunet_forward, resunet_manifest
from .tv import IdentityPrior, TVPrior, tv_denoise
from .weights import WeightFormatError, WeightStore, load_weights, save_weights

__all__ = [
    "IdentityPrior", "ResUNetPrior", "TVPrior", "WeightFormatError", "WeightStore",
    "load_weights", "resunet_forward", "resunet_manifest", "save_weights", "tv_denoise",
]
