# Doublon module package
