"""Differentially private decentralized consensus ADMM.

Library + CLI simulator for private ADMM training of a linear classifier
over a graph of agents, with zCDP budget accounting and an SVT-gated
communication-saving variant.
"""

__version__ = "0.1.0"
