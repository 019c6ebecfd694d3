import numpy as np
from scipy.optimize import minimize

# Parameters
N = 5
Pmax = 10
Rmin = 5
N0 = 0.001
G = np.array([1, 1, 1, 1, 1])

# Objective
def objective(x):
    return -(np.log2(1 + x[0] * G[0] / N0) + np.log2(1 + x[1] * G[1] / N0) + np.log2(1 + x[2] * G[2] / N0) + np.log2(1 + x[3] * G[3] / N0) + np.log2(1 + x[4] * G[4] / N0))  # maximize

# Constraints
def constraint_power(x):
    return -(x[0] + x[1] + x[2] + x[3] + x[4] - Pmax)

def constraint_qos(x):
    return np.array([
        -(N0 * (2**5 - 1) - x[0] * G[0]),
        -(N0 * (2**5 - 1) - x[1] * G[1]),
        -(N0 * (2**5 - 1) - x[2] * G[2]),
        -(N0 * (2**5 - 1) - x[3] * G[3]),
        -(N0 * (2**5 - 1) - x[4] * G[4]),
    ])

# Initial guess
x0 = np.array([5, 5, 5, 5, 5])

# Bounds
bounds = [(0, 10), (0, 10), (0, 10), (0, 10), (0, 10)]

constraints = [{'type': 'ineq', 'fun': constraint_power},
               {'type': 'ineq', 'fun': constraint_qos}]

result = minimize(objective, x0, bounds=bounds, constraints=constraints)

print("Objective Function Value:", -result.fun)
print("Solution:", result.x)
