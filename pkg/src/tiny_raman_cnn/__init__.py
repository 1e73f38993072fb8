__version__ = "0.1.0"

from tiny_raman_cnn.core.settings import ArchConfig, TrainConfig
from tiny_raman_cnn.core.model import ModelParams, init_model, forward, backward, predict
from tiny_raman_cnn.core.trainer import train, evaluate, kfold_cv
from tiny_raman_cnn.viz.contribution import gradcam_map, fc_contribution_map
