from .base_engine import BaseEngine
from .fcm_engine import FcmEngine, WfcmState, run_fcm, run_wfcm
from .minimax_engine import MinimaxEngine, MinimaxState, run_minimax, init_farthest_first, init_fcm_consensus
