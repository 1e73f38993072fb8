from tiny_raman_cnn.ndcore.types import ChannelMap, ConvFilterBank, DenseWeights, PoolRecord
from tiny_raman_cnn.ndcore.conv import conv1d_forward, conv1d_backward
from tiny_raman_cnn.ndcore.activation import leaky_relu, leaky_relu_backward
from tiny_raman_cnn.ndcore.pooling import maxpool2_forward, maxpool2_backward
from tiny_raman_cnn.ndcore.dense import fc_forward, fc_backward
from tiny_raman_cnn.ndcore.dropout import dropout, dropout_backward, TRAIN, INFER
from tiny_raman_cnn.ndcore.loss import softmax_cross_entropy
