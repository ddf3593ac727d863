"""From-scratch convolutional network with backprop and Grad-CAM."""

from .gradcam import gradcam, upsample_heatmap, window_mass
from .layers import Conv2D, Dense, Dropout, Flatten, Layer, MaxPool2D, ReLU, softmax
from .net import ConvNet, loss_and_grads, weighted_cross_entropy
from .training import History, train

__all__ = [
    "Conv2D", "Dense", "Dropout", "Flatten", "Layer", "MaxPool2D", "ReLU", "softmax",
    "ConvNet", "loss_and_grads", "weighted_cross_entropy", "History", "train",
    "gradcam", "upsample_heatmap", "window_mass",
]
