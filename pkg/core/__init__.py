# Core package for passive decoy-state QKD numerics
