# Topology module package
