# Dynamics module package
