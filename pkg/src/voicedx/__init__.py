"""voicedx: voice-disorder classification from continuous speech.

Pipeline: WAV ingest -> likelihood-ratio VAD -> MFCC+delta features ->
frame-level classifiers (DNN / LSTM / BiLSTM / GRU / random forest) ->
utterance-level majority vote -> accuracy / sensitivity / UAR metrics,
plus PCA visualization of hidden features.
"""

__version__ = "0.1.0"
