__global__ void smooth_x(const float* in, float* out, int n)
{
    extern __shared__ float s[];
    int l = threadIdx.x + 1;
    int g = blockIdx.x*blockDim.x+threadIdx.x;
    s[l] = in[g];
    if (threadIdx.x == 0) s[0] = (g > 0) ? in[g - 1] : in[g];
    if (threadIdx.x == blockDim.x - 1) s[l + 1] = (g + 1 < n) ? in[g + 1] : in[g];
    __syncthreads();
    out[g] = 0.25f*s[l - 1] + 0.5f*s[l] + 0.25f*s[l + 1];
}
