"""Toolkit for low-training-cost simultaneous speech translation plumbing.

The pieces: CTC greedy decoding, forward loss, and sequence compression
(`ctc`); corpus quality filtering and manifests (`corpus`); probabilistic
audio segmentation (`segment`); the wait-k simultaneous session with
adaptive word detection (`policy`); Average Lagging metrics (`latency`);
BLEU with 13a tokenization (`bleu`); feature containers and CMVN
(`features`); and a scripted toy model for exact end-to-end fixtures
(`toy`). The `streamst` console command fronts all of it.
"""

__version__ = "0.3.0"
