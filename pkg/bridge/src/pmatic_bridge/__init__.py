"""Line-protocol predictor server for pmatic.

The bridge process answers HELLO/PREDICT/RESET requests over stdio or TCP,
backed either by a causal language model (``--model``) or by a deterministic
hash-of-context toy model (``--toy``) that needs no ML runtime. The package
deliberately depends on nothing outside the standard library so it can sit on
the far side of a process boundary from the compressor.
"""

from .server import PROTOCOL_VERSION, BridgeSession
from .toy import ToyModel, toy_logits

__all__ = ["PROTOCOL_VERSION", "BridgeSession", "ToyModel", "toy_logits"]
__version__ = "0.1.0"
