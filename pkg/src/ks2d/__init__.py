"""Constructive toolkit for small-data global existence of the 2D Kuramoto-Sivashinsky equation with growing modes."""
