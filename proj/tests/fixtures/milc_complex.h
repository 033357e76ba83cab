struct complex { double real; double imag; };
