# ContourOpt: probability-contour constrained optimization
