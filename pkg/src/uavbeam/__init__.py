"""Location-aware predictive beamforming for a UAV-to-UE link.

Seeded trajectory simulation, an LSTM location predictor trained from
scratch with numpy, and link-level rate comparison against genie-aided and
Kalman baselines.
"""

__version__ = "0.1.0"
