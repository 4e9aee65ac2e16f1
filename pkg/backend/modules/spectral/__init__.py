# Spectral module package
