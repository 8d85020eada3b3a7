"""HTTP service exposing scenario management and solve/sweep/compare jobs."""
