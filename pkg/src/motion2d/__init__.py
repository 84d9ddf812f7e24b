"""motion2d: decompose 2D pose sequences into motion, skeleton, and view
latents; recombine them to retarget motion; search sequences by latent
motion similarity."""

__version__ = "0.1.0"
