"""
Latent-space watermarking lab
Keyed watermark codecs, removal attacks, the boundary-hiding defense and the
security games that compare them
"""

__version__ = "1.0.0"
