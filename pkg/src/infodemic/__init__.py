"""infodemic: a from-scratch text-classification workbench.

Reproduces a misinformation-detection experiment grid on short social-media
posts: deterministic preprocessing, TF-IDF and pretrained-embedding
featurization, four conventional classifiers, four neural architectures
trained by a minimal reverse-mode engine, and a majority-vote ensemble.
"""

__version__ = "0.1.0"
