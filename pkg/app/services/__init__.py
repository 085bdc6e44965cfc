"""Simulator services: datastore, encoding, partitioning, learner, cache and harness."""
