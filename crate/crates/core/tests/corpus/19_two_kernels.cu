__global__ void square(float* v, int n)
{
    int i = blockIdx.x*blockDim.x+threadIdx.x;
    if (i < n) v[i] = v[i]*v[i];
}

__global__ void negate(float* v, int n)
{
    for (int i = blockIdx.x*blockDim.x+threadIdx.x; i < n; i += gridDim.x*blockDim.x)
        v[i] = -v[i];
}
