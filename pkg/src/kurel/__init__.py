"""kurel: build and model four-class question-relatedness datasets.

The toolkit turns a Stack-Exchange-style data dump into a dataset of
knowledge-unit pairs labeled duplicate / direct / indirect / isolated,
and ships two reference classifiers over those pairs: a linear SVM on
similarity features (including soft-cosine) and a shared-encoder BiLSTM
with pairwise dot-product interactions.
"""

__version__ = "0.1.0"
