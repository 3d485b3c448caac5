"""Baseband simulation toolkit for waveform-coexistence links.

Two problem settings share the primitives in this package: a two-user
downlink where an index-modulated waveform is power-multiplexed with plain
OFDM and separated by LDPC-aided interference cancellation, and a shared
radar/communication frame where an FMCW chirp train both sounds the channel
for a superimposed OFDM payload and serves range-Doppler sensing.
"""

__version__ = "0.1.0"
