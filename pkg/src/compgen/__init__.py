"""Non-neural machinery for few-shot compositional data-to-text generation."""

__version__ = "0.1.0"
