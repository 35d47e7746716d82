"""RLOpt: optimización bayesiana de hiperparámetros de SARSA(λ)."""
