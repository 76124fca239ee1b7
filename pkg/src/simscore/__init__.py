"""Information-theoretic similarity between chroma time series.

Compression-based (NCD, NCDA), discrete-prediction-based (log-loss, D×, JSD)
and continuous-prediction-based (NID, D×, NMSE) distances, plus a
filter-and-refine retrieval pipeline and evaluation harness for cover song
identification.
"""

__version__ = "0.1.0"
